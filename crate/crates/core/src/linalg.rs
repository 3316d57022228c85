//! Dense complex linear algebra shared by every other module.
//!
//! Matrices and states are plain `nalgebra` dynamic matrices and vectors over
//! `Complex64`. Eigen- and singular-value kernels come from `nalgebra`; this
//! module adds the structure checks, the deterministic polar factor and the
//! PSD square root built on top of them.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type StateVector = DVector<C64>;

/// Default tolerance for structural checks (Hermitian, unitary, contraction).
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Eigenvalues of a PSD argument in `[-PSD_CLAMP, 0)` are treated as zero.
pub const PSD_CLAMP: f64 = 1e-10;

/// Singular values at or below this (relative to max(1, sigma_max)) are null.
const NULL_SINGULAR: f64 = 1e-13;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Builds a matrix from a real row-major table.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

pub fn ensure_square(a: &ComplexMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Frobenius norm; used for residuals since it bounds the operator norm.
pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_residual(a: &ComplexMatrix) -> f64 {
    frobenius(&(a - a.adjoint()))
}

pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    frobenius(&(u.adjoint() * u - identity(n)))
}

pub fn ensure_hermitian(a: &ComplexMatrix, tol: f64) -> Result<usize> {
    let n = ensure_square(a)?;
    let residual = hermitian_residual(a);
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    Ok(n)
}

pub fn ensure_unitary(u: &ComplexMatrix, tol: f64) -> Result<usize> {
    let n = ensure_square(u)?;
    let residual = unitarity_residual(u);
    if residual > tol {
        return Err(Error::NotUnitary { residual });
    }
    Ok(n)
}

/// Checks `||a|| <= 1 + tol` and returns the operator norm.
pub fn ensure_contraction(a: &ComplexMatrix, tol: f64) -> Result<f64> {
    let norm = operator_norm(a)?;
    if norm > 1.0 + tol {
        return Err(Error::NotContraction { norm });
    }
    Ok(norm)
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// `Q f(diag(lambda)) Q^dagger`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * q.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|x| x)
    }
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    hermitian_eig_with_tol(h, DEFAULT_TOLERANCE)
}

pub fn hermitian_eig_with_tol(h: &ComplexMatrix, tol: f64) -> Result<HermitianEig> {
    let n = ensure_hermitian(h, tol)?;
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, idx[j])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    ensure_square(a)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let sv = a.clone().singular_values();
    Ok(sv.iter().copied().fold(0.0, f64::max))
}

/// Singular value decomposition `A = W diag(sigma) V^dagger` with a fixed gauge:
/// singular values descending, the first nonzero entry of every left singular
/// vector real positive, and null-space columns of `W` and `V` obtained by
/// Gram-Schmidt completion over the standard basis.
#[derive(Debug, Clone)]
pub struct DeterministicSvd {
    pub w: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd_deterministic(a: &ComplexMatrix) -> Result<DeterministicSvd> {
    let n = ensure_square(a)?;
    if n == 0 {
        return Ok(DeterministicSvd {
            w: ComplexMatrix::zeros(0, 0),
            sigma: vec![],
            v: ComplexMatrix::zeros(0, 0),
        });
    }
    // nalgebra's complex SVD drifts to ~1e-10 on clustered spectra; faer's
    // stays at roundoff.
    let fa = faer::Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
    let svd = fa
        .svd()
        .map_err(|_| Error::BadParameters("SVD did not converge".into()))?;
    let w_raw = ComplexMatrix::from_fn(n, n, |i, j| svd.U()[(i, j)]);
    let v_raw = ComplexMatrix::from_fn(n, n, |i, j| svd.V()[(i, j)]);
    let singular: Vec<f64> = (0..n).map(|k| svd.S().column_vector()[k].re).collect();
    let mut rank_order: Vec<usize> = (0..n).collect();
    rank_order.sort_by(|&i, &j| singular[j].total_cmp(&singular[i]));
    let sigma_max = singular[rank_order[0]];
    let cutoff = NULL_SINGULAR * sigma_max.max(1.0);

    let mut w_cols: Vec<StateVector> = Vec::with_capacity(n);
    let mut v_cols: Vec<StateVector> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for &k in &rank_order {
        let s = singular[k];
        if s <= cutoff {
            break;
        }
        let mut wk: StateVector = w_raw.column(k).into_owned();
        let mut vk: StateVector = v_raw.column(k).into_owned();
        if let Some(lead) = wk.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = lead.conj() / lead.norm();
            wk.scale_mut_c(phase);
            vk.scale_mut_c(phase);
        }
        w_cols.push(wk);
        v_cols.push(vk);
        sigma.push(s);
    }
    complete_basis(&mut w_cols, n);
    complete_basis(&mut v_cols, n);
    sigma.resize(n, 0.0);
    Ok(DeterministicSvd {
        w: ComplexMatrix::from_columns(&w_cols),
        sigma,
        v: ComplexMatrix::from_columns(&v_cols),
    })
}

trait ScaleComplex {
    fn scale_mut_c(&mut self, z: C64);
}

impl ScaleComplex for StateVector {
    fn scale_mut_c(&mut self, z: C64) {
        for x in self.iter_mut() {
            *x *= z;
        }
    }
}

/// Extends an orthonormal set to a basis of C^n using e_0, e_1, ... in order.
fn complete_basis(cols: &mut Vec<StateVector>, n: usize) {
    let mut candidate = 0;
    while cols.len() < n && candidate < n {
        let mut e = StateVector::zeros(n);
        e[candidate] = ONE;
        candidate += 1;
        // Two passes of classical Gram-Schmidt.
        for _ in 0..2 {
            for q in cols.iter() {
                let overlap = q.dotc(&e);
                e -= q * overlap;
            }
        }
        let norm = e.norm();
        if norm > 1e-6 {
            cols.push(e / c(norm, 0.0));
        }
    }
}

/// `A = U P` with `U` unitary and `P = (A^dagger A)^{1/2}`.
#[derive(Debug, Clone)]
pub struct Polar {
    pub u: ComplexMatrix,
    pub p: ComplexMatrix,
}

/// Polar decomposition through the gauge-fixed SVD: `U = W V^dagger`,
/// `P = V diag(sigma) V^dagger`. Deterministic for rank-deficient input.
pub fn polar_decompose(a: &ComplexMatrix) -> Result<Polar> {
    let svd = svd_deterministic(a)?;
    let u = &svd.w * svd.v.adjoint();
    let mut v_sigma = svd.v.clone();
    for (k, &s) in svd.sigma.iter().enumerate() {
        v_sigma.column_mut(k).scale_mut(s);
    }
    let p = v_sigma * svd.v.adjoint();
    // P is Hermitian in exact arithmetic; drop the roundoff skew.
    let p = (&p + p.adjoint()).scale(0.5);
    Ok(Polar { u, p })
}

/// Principal square root of a positive semidefinite Hermitian matrix.
pub fn matrix_sqrt_psd(p: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(p)?;
    if let Some(&worst) = eig.eigenvalues.iter().find(|&&l| l < -PSD_CLAMP) {
        return Err(Error::NotPsd { eigenvalue: worst });
    }
    let s = eig.apply_fn(|l| l.max(0.0).sqrt());
    Ok((&s + s.adjoint()).scale(0.5))
}

/// `(I - a a^dagger)^{1/2}`, the defect operator of a contraction.
pub fn defect(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = ensure_square(a)?;
    matrix_sqrt_psd(&(identity(n) - a * a.adjoint()))
}

/// Assembles `[[a, b], [c, d]]` from four equally sized square blocks.
pub fn block2(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c_: &ComplexMatrix,
    d: &ComplexMatrix,
) -> ComplexMatrix {
    let n = a.nrows();
    let mut out = ComplexMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((0, n), (n, n)).copy_from(b);
    out.view_mut((n, 0), (n, n)).copy_from(c_);
    out.view_mut((n, n), (n, n)).copy_from(d);
    out
}

/// Top-left `n x n` block.
pub fn top_left(a: &ComplexMatrix, n: usize) -> ComplexMatrix {
    a.view((0, 0), (n, n)).into_owned()
}

pub fn state_norm(v: &StateVector) -> f64 {
    v.norm()
}

pub fn normalize(v: &StateVector) -> Option<StateVector> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(v / c(norm, 0.0))
}

/// Multiplies by the global phase that makes the largest-magnitude amplitude
/// real and positive. Ties are broken by the lowest index.
pub fn canonical_phase(v: &StateVector) -> StateVector {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        // Roundoff-level differences should not flip the reference index.
        if z.norm() > best_mag + 1e-12 {
            best_mag = z.norm();
            best = i;
        }
    }
    if best_mag <= 0.0 {
        return v.clone();
    }
    let phase = v[best].conj() / v[best].norm();
    v.map(|z| z * phase)
}

/// `min_theta ||a - e^{i theta} b||` for unit vectors a, b.
pub fn phase_distance(a: &StateVector, b: &StateVector) -> f64 {
    let overlap = b.dotc(a);
    let mag = overlap.norm();
    let phase = if mag > 0.0 { overlap / mag } else { ONE };
    (a - b * phase).norm()
}

/// `<psi| A |psi>` real part, for Hermitian `A`.
pub fn expectation(a: &ComplexMatrix, psi: &StateVector) -> f64 {
    psi.dotc(&(a * psi)).re
}

pub fn matrix_power(a: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let mut out = identity(a.nrows());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

/// Number of qubits needed to index `count` items (`ceil(log2 count)`, 0 for 1).
pub fn qubits_for(count: usize) -> usize {
    if count <= 1 {
        0
    } else {
        (usize::BITS - (count - 1).leading_zeros()) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let r = frobenius(&(a - b));
        assert!(r <= tol, "residual {r:e}\n{a}\n{b}");
    }

    #[test]
    fn eig_identity() {
        let e = hermitian_eig(&identity(2)).unwrap();
        assert_eq!(e.eigenvalues.len(), 2);
        for l in &e.eigenvalues {
            assert!((l - 1.0).abs() < 1e-14);
        }
        assert!(unitarity_residual(&e.eigenvectors) < 1e-12);
    }

    #[test]
    fn eig_diagonal_order_and_vectors() {
        let e = hermitian_eig(&diag_real(&[1.0, 0.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0, 1.0]);
        // eigenvector of 0 is e1, of 1 is e0 (up to phase)
        assert!((e.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let h = sample::hermitian(&mut rng, 4, 1.0);
            let e = hermitian_eig(&h).unwrap();
            assert_close(&e.reconstruct(), &h, 1e-10);
            assert!(unitarity_residual(&e.eigenvectors) < 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_rejects_bad_input() {
        let a = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
        let r = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&r), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn polar_identity() {
        let p = polar_decompose(&identity(3)).unwrap();
        assert_close(&p.u, &identity(3), 1e-14);
        assert_close(&p.p, &identity(3), 1e-14);
    }

    #[test]
    fn polar_rank_deficient_completion() {
        let a = diag_real(&[1.0, 0.0]);
        let p = polar_decompose(&a).unwrap();
        assert_close(&p.p, &diag_real(&[1.0, 0.0]), 1e-14);
        assert_close(&p.u, &identity(2), 1e-14);
        assert_close(&(&p.u * &p.p), &a, 1e-14);

        let z = ComplexMatrix::zeros(3, 3);
        let p = polar_decompose(&z).unwrap();
        assert_close(&p.u, &identity(3), 1e-14);
    }

    #[test]
    fn polar_half_x() {
        let x = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p = polar_decompose(&x.scale(0.5)).unwrap();
        assert_close(&p.u, &x, 1e-12);
        assert_close(&p.p, &identity(2).scale(0.5), 1e-12);
    }

    #[test]
    fn polar_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=8 {
            let a = sample::gaussian_matrix(&mut rng, n);
            let p = polar_decompose(&a).unwrap();
            assert_close(&(&p.u * &p.p), &a, 1e-10);
            assert!(unitarity_residual(&p.u) < 1e-10);
            assert!(hermitian_residual(&p.p) < 1e-12);
        }
    }

    #[test]
    fn sqrt_psd_cases() {
        assert_close(&matrix_sqrt_psd(&identity(2)).unwrap(), &identity(2), 1e-14);
        let s = matrix_sqrt_psd(&diag_real(&[4.0, 9.0])).unwrap();
        assert_close(&s, &diag_real(&[2.0, 3.0]), 1e-13);
        let bad = diag_real(&[1.0, -1e-3]);
        assert!(matches!(matrix_sqrt_psd(&bad), Err(Error::NotPsd { .. })));
        // tiny negatives are clamped
        let ok = diag_real(&[1.0, -1e-11]);
        let s = matrix_sqrt_psd(&ok).unwrap();
        assert!(s[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn operator_norm_cases() {
        assert!((operator_norm(&identity(4)).unwrap() - 1.0).abs() < 1e-14);
        assert!((operator_norm(&diag_real(&[0.3, -0.8])).unwrap() - 0.8).abs() < 1e-14);
        assert!(operator_norm(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn phase_helpers() {
        let v = StateVector::from_vec(vec![c(0.0, 0.6), c(0.0, -0.8)]);
        let w = canonical_phase(&v);
        assert!((w[1] - c(0.8, 0.0)).norm() < 1e-15);
        assert!(phase_distance(&v, &w) < 1e-15);
    }

    #[test]
    fn qubit_counts() {
        assert_eq!(qubits_for(1), 0);
        assert_eq!(qubits_for(2), 1);
        assert_eq!(qubits_for(3), 2);
        assert_eq!(qubits_for(4), 2);
        assert_eq!(qubits_for(5), 3);
    }
}
