//! JSON encoding for complex scalars, matrices and vectors.
//!
//! A scalar is `[re, im]` (a bare number is accepted on input as a real
//! scalar), a matrix is a row-major array of rows and a vector is a flat array.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, StateVector, C64};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum JsonScalar {
    Pair([f64; 2]),
    Real(f64),
}

impl From<JsonScalar> for C64 {
    fn from(s: JsonScalar) -> Self {
        match s {
            JsonScalar::Pair([re, im]) => c(re, im),
            JsonScalar::Real(re) => c(re, 0.0),
        }
    }
}

fn pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn matrix_to_value(a: &ComplexMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| pair(&a[(i, j)])).collect())
        .collect();
    serde_json::to_value(rows).expect("finite matrix serializes")
}

pub fn vector_to_value(v: &StateVector) -> serde_json::Value {
    let flat: Vec<[f64; 2]> = v.iter().map(pair).collect();
    serde_json::to_value(flat).expect("finite vector serializes")
}

fn rows_to_matrix(rows: Vec<Vec<JsonScalar>>) -> Result<ComplexMatrix> {
    let r = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|row| row.len() != cols) {
        return Err(Error::Parse(format!(
            "ragged matrix: row of length {} in a {}-column matrix",
            bad.len(),
            cols
        )));
    }
    let flat: Vec<C64> = rows.into_iter().flatten().map(C64::from).collect();
    Ok(ComplexMatrix::from_row_slice(r, cols, &flat))
}

pub fn matrix_from_value(v: &serde_json::Value) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<JsonScalar>> = serde_json::from_value(v.clone())?;
    rows_to_matrix(rows)
}

pub fn vector_from_value(v: &serde_json::Value) -> Result<StateVector> {
    let flat: Vec<JsonScalar> = serde_json::from_value(v.clone())?;
    Ok(StateVector::from_iterator(
        flat.len(),
        flat.into_iter().map(C64::from),
    ))
}

pub fn matrix_from_str(s: &str) -> Result<ComplexMatrix> {
    matrix_from_value(&serde_json::from_str(s)?)
}

/// `#[serde(with = "json::matrix")]` support.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(a: &ComplexMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_value(a).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<ComplexMatrix, D::Error> {
        let rows = Vec::<Vec<JsonScalar>>::deserialize(d)?;
        rows_to_matrix(rows).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "json::matrices")]` support for lists of matrices.
pub mod matrices {
    use super::*;

    pub fn serialize<S: Serializer>(a: &[ComplexMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let vals: Vec<serde_json::Value> = a.iter().map(matrix_to_value).collect();
        vals.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<ComplexMatrix>, D::Error> {
        let all = Vec::<Vec<Vec<JsonScalar>>>::deserialize(d)?;
        all.into_iter()
            .map(|rows| rows_to_matrix(rows).map_err(D::Error::custom))
            .collect()
    }
}

/// `#[serde(with = "json::vector")]` support.
pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &StateVector, s: S) -> std::result::Result<S::Ok, S::Error> {
        vector_to_value(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<StateVector, D::Error> {
        let flat = Vec::<JsonScalar>::deserialize(d)?;
        Ok(StateVector::from_iterator(flat.len(), flat.into_iter().map(C64::from)))
    }
}

/// `#[serde(with = "json::opt_vector")]` support.
pub mod opt_vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<StateVector>, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.as_ref().map(vector_to_value).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<StateVector>, D::Error> {
        let flat = Option::<Vec<JsonScalar>>::deserialize(d)?;
        Ok(flat.map(|f| StateVector::from_iterator(f.len(), f.into_iter().map(C64::from))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn accepts_bare_reals_and_pairs() {
        let a = matrix_from_str("[[1, [0, 2]], [[3, -1], 0.5]]").unwrap();
        assert_eq!(a[(0, 1)], c(0.0, 2.0));
        assert_eq!(a[(1, 0)], c(3.0, -1.0));
        assert_eq!(a[(1, 1)], c(0.5, 0.0));
    }

    #[test]
    fn rejects_ragged_rows() {
        assert!(matches!(matrix_from_str("[[1, 2], [3]]"), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn text_round_trip(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = sample::gaussian_matrix(&mut rng, n);
            let text = serde_json::to_string(&matrix_to_value(&a)).unwrap();
            let back = matrix_from_str(&text).unwrap();
            for (x, y) in a.iter().zip(back.iter()) {
                prop_assert!((x - y).norm() <= 1e-12);
            }
            let v = sample::state(&mut rng, n);
            let text = serde_json::to_string(&vector_to_value(&v)).unwrap();
            let back = vector_from_value(&serde_json::from_str(&text).unwrap()).unwrap();
            prop_assert!((v - back).norm() <= 1e-12);
        }
    }
}
