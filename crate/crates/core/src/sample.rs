//! Seeded random instances: unitaries, Hermitian contractions, contractions
//! and states. Used by property sweeps and the acceptance suite.

use nalgebra::QR;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, ComplexMatrix, StateVector, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// Complex Ginibre matrix (i.i.d. standard normal real and imaginary parts).
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

/// Haar-distributed unitary via QR with the diagonal phases of R removed.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let qr = QR::new(gaussian_matrix(rng, n));
    let (mut q, r) = qr.unpack();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let mut col = q.column_mut(k);
        for z in col.iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// `Q diag(values) Q^dagger` for a Haar-random `Q`.
pub fn with_spectrum<R: Rng + ?Sized>(rng: &mut R, values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    let q = unitary(rng, n);
    let mut scaled = q.clone();
    for (k, &v) in values.iter().enumerate() {
        scaled.column_mut(k).scale_mut(v);
    }
    let h = scaled * q.adjoint();
    (&h + h.adjoint()).scale(0.5)
}

/// Hermitian matrix with eigenvalues uniform in `[-radius, radius]`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, radius: f64) -> ComplexMatrix {
    let values: Vec<f64> = (0..n).map(|_| rng.random_range(-radius..=radius)).collect();
    with_spectrum(rng, &values)
}

/// Hermitian contraction. Roughly one draw in four pins an eigenvalue to +-1
/// so the boundary of the unit ball is exercised.
pub fn hermitian_contraction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    if n > 0 && rng.random_bool(0.25) {
        values[0] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    with_spectrum(rng, &values)
}

/// General contraction `W diag(s) V^dagger` with singular values in `[0, 1]`.
/// Some draws include exact zeros or ones.
pub fn contraction<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let mut s: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    if n > 1 && rng.random_bool(0.2) {
        s[0] = 0.0;
    }
    if n > 1 && rng.random_bool(0.2) {
        s[n - 1] = 1.0;
    }
    let w = unitary(rng, n);
    let v = unitary(rng, n);
    let mut ws = w.clone();
    for (k, &sk) in s.iter().enumerate() {
        ws.column_mut(k).scale_mut(sk);
    }
    ws * v.adjoint()
}

/// Uniformly random unit vector.
pub fn state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let v = StateVector::from_fn(dim, |_, _| gaussian(rng));
    let norm = v.norm();
    v / c(norm, 0.0)
}
