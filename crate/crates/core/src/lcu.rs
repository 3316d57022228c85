//! Building blocks of duality quantum computing: two-unitary decompositions,
//! wave divider/combiner unitaries, unitary dilations of contractions, and the
//! Chebyshev walk operator with its matrix polynomials.

use crate::error::{Error, Result};
use crate::linalg::{
    block2, ensure_contraction, ensure_hermitian, ensure_square, hermitian_eig_with_tol, identity,
    polar_decompose, svd_deterministic, ComplexMatrix, StateVector, C64, DEFAULT_TOLERANCE, I,
};

/// `a = (u0 + u1) / 2` with both factors unitary.
#[derive(Debug, Clone)]
pub struct TwoUnitaryDecomposition {
    pub u0: ComplexMatrix,
    pub u1: ComplexMatrix,
}

impl TwoUnitaryDecomposition {
    pub fn average(&self) -> ComplexMatrix {
        (&self.u0 + &self.u1).scale(0.5)
    }
}

pub fn decompose_contraction(a: &ComplexMatrix) -> Result<TwoUnitaryDecomposition> {
    decompose_contraction_with_tol(a, DEFAULT_TOLERANCE)
}

/// Splits a contraction `A = U P` into `U (P +- i (I - P^2)^{1/2})`.
pub fn decompose_contraction_with_tol(
    a: &ComplexMatrix,
    tol: f64,
) -> Result<TwoUnitaryDecomposition> {
    ensure_square(a)?;
    ensure_contraction(a, tol)?;
    let polar = polar_decompose(a)?;
    // P and (I - P^2)^{1/2} share the eigenbasis of P.
    let eig = hermitian_eig_with_tol(&polar.p, tol)?;
    let root = eig.apply_fn(|x| (1.0 - x * x).max(0.0).sqrt());
    let root_i = root.map(|z| z * I);
    let u0 = &polar.u * (&polar.p + &root_i);
    let u1 = &polar.u * (&polar.p - &root_i);
    Ok(TwoUnitaryDecomposition { u0, u1 })
}

/// Quantum wave divider `v` and combiner `w = v^dagger` for real nonnegative
/// weights. `weights` holds the normalized, zero-padded coefficients.
#[derive(Debug, Clone)]
pub struct DividerCombiner {
    pub v: ComplexMatrix,
    pub w: ComplexMatrix,
    pub weights: Vec<f64>,
    /// Sum of the weights before normalization.
    pub scale: f64,
}

impl DividerCombiner {
    pub fn slits(&self) -> usize {
        self.weights.len()
    }
}

pub fn build_divider_combiner(weights: &[f64], m: usize) -> Result<DividerCombiner> {
    let slits = 1usize << m;
    if weights.len() > slits {
        return Err(Error::TooManyWeights {
            count: weights.len(),
            capacity: slits,
        });
    }
    if let Some((index, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
    {
        return Err(Error::NegativeWeight { index, value });
    }
    let scale: f64 = weights.iter().sum();
    if scale <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    let mut normalized: Vec<f64> = weights.iter().map(|w| w / scale).collect();
    normalized.resize(slits, 0.0);

    let target: Vec<f64> = normalized.iter().map(|c| c.sqrt()).collect();
    let v = householder_from_e0(&target);
    let w = v.adjoint();
    Ok(DividerCombiner {
        v,
        w,
        weights: normalized,
        scale,
    })
}

/// Real reflection taking `e0` to the unit vector `x` (identity when `x = e0`).
fn householder_from_e0(x: &[f64]) -> ComplexMatrix {
    let n = x.len();
    let mut u: Vec<f64> = x.iter().map(|xi| -xi).collect();
    u[0] += 1.0;
    let uu: f64 = u.iter().map(|ui| ui * ui).sum();
    if uu < 1e-30 {
        return identity(n);
    }
    let mut v = ComplexMatrix::from_fn(n, n, |i, j| C64::new(-2.0 * u[i] * u[j] / uu, 0.0));
    for i in 0..n {
        v[(i, i)] += 1.0;
    }
    // Column 0 is x exactly in exact arithmetic; pin it to kill roundoff.
    for (i, &xi) in x.iter().enumerate() {
        v[(i, 0)] = C64::new(xi, 0.0);
    }
    v
}

/// Unitary `u` on one ancilla qubit plus the work register whose top-left
/// block is the contraction `b`.
#[derive(Debug, Clone)]
pub struct Dilation {
    pub b: ComplexMatrix,
    pub u: ComplexMatrix,
}

impl Dilation {
    /// `u (|0> (x) psi)`.
    pub fn apply_to_ancilla_zero(&self, psi: &StateVector) -> StateVector {
        let n = self.b.nrows();
        let mut input = StateVector::zeros(2 * n);
        input.rows_mut(0, n).copy_from(psi);
        &self.u * input
    }
}

pub fn dilate_contraction(b: &ComplexMatrix) -> Result<Dilation> {
    dilate_contraction_with_tol(b, DEFAULT_TOLERANCE)
}

/// `u = [[b, -(I - b b^dagger)^{1/2}], [(I - b^dagger b)^{1/2}, b^dagger]]`.
pub fn dilate_contraction_with_tol(b: &ComplexMatrix, tol: f64) -> Result<Dilation> {
    ensure_square(b)?;
    ensure_contraction(b, tol)?;
    let (left, right) = defects(b)?;
    let u = block2(b, &(-left), &right, &b.adjoint());
    Ok(Dilation { b: b.clone(), u })
}

/// `((I - b b^dagger)^{1/2}, (I - b^dagger b)^{1/2})` from one SVD, with the
/// singular values clipped to `[0, 1]`.
fn defects(b: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let svd = svd_deterministic(b)?;
    let d: Vec<f64> = svd.sigma.iter().map(|s| (1.0 - s * s).max(0.0).sqrt()).collect();
    let conj = |q: &ComplexMatrix| {
        let mut scaled = q.clone();
        for (k, &dk) in d.iter().enumerate() {
            scaled.column_mut(k).scale_mut(dk);
        }
        scaled * q.adjoint()
    };
    Ok((conj(&svd.w), conj(&svd.v)))
}

fn ensure_hermitian_contraction(h: &ComplexMatrix, tol: f64) -> Result<()> {
    ensure_hermitian(h, tol)?;
    ensure_contraction(h, tol)?;
    Ok(())
}

pub fn walk_operator(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    walk_operator_with_tol(h, DEFAULT_TOLERANCE)
}

/// `L = [[H, -(I - H^2)^{1/2}], [(I - H^2)^{1/2}, H]]`.
pub fn walk_operator_with_tol(h: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    ensure_hermitian_contraction(h, tol)?;
    let eig = hermitian_eig_with_tol(h, tol)?;
    let root = eig.apply_fn(|x| (1.0 - x * x).max(0.0).sqrt());
    Ok(block2(h, &(-&root), &root, h))
}

/// Chebyshev polynomial of the first kind, `T_n(h)`.
pub fn chebyshev_t(n: usize, h: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_hermitian_contraction(h, DEFAULT_TOLERANCE)?;
    Ok(chebyshev_recurrence(n, h, identity(h.nrows()), h.clone()))
}

/// Chebyshev polynomial of the second kind, `U_n(h)`.
pub fn chebyshev_u(n: usize, h: &ComplexMatrix) -> Result<ComplexMatrix> {
    ensure_hermitian_contraction(h, DEFAULT_TOLERANCE)?;
    Ok(chebyshev_recurrence(n, h, identity(h.nrows()), h.scale(2.0)))
}

/// `P_{k+1} = 2 h P_k - P_{k-1}` from the given `P_0`, `P_1`.
fn chebyshev_recurrence(
    n: usize,
    h: &ComplexMatrix,
    p0: ComplexMatrix,
    p1: ComplexMatrix,
) -> ComplexMatrix {
    if n == 0 {
        return p0;
    }
    let two_h = h.scale(2.0);
    let (mut prev, mut cur) = (p0, p1);
    for _ in 1..n {
        let next = &two_h * &cur - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[T_0(h), T_2(h), ..., T_{2(count-1)}(h)]` in one recurrence pass.
pub fn even_chebyshev_series(h: &ComplexMatrix, count: usize) -> Result<Vec<ComplexMatrix>> {
    ensure_hermitian_contraction(h, DEFAULT_TOLERANCE)?;
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let two_h = h.scale(2.0);
    let mut prev = identity(h.nrows());
    let mut cur = h.clone();
    out.push(prev.clone());
    let mut degree = 1;
    while out.len() < count {
        let next = &two_h * &cur - &prev;
        prev = cur;
        cur = next;
        degree += 1;
        if degree % 2 == 0 {
            out.push(cur.clone());
        }
    }
    Ok(out)
}

/// Coefficients of `x^{2 m0} = sum_i alpha_i T_{2i}(x)`, truncated to `M` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevWeights {
    pub alphas: Vec<f64>,
    pub alpha_sum: f64,
}

/// `alpha_i = 2^{1 - 2 m0} (1/2)^{[i = 0]} C(2 m0, m0 + i)` for `i < M`.
pub fn chebyshev_weights(m0: usize, m: usize) -> Result<ChebyshevWeights> {
    if m0 == 0 {
        return Err(Error::BadParameters("m0 must be at least 1".into()));
    }
    if m < 1 || m > m0 + 1 {
        return Err(Error::BadTruncation { m0, m });
    }
    let n = 2 * m0;
    let alphas: Vec<f64> = (0..m)
        .map(|i| {
            let a = scaled_binomial(n, m0 + i);
            if i == 0 {
                0.5 * a
            } else {
                a
            }
        })
        .collect();
    let alpha_sum = alphas.iter().sum();
    Ok(ChebyshevWeights { alphas, alpha_sum })
}

/// `2^{1-n} C(n, k)`.
fn scaled_binomial(n: usize, k: usize) -> f64 {
    if n <= 1000 {
        let k = k.min(n - k);
        let mut value = 1.0f64;
        for j in 0..k {
            value = value * (n - j) as f64 / (j + 1) as f64;
        }
        value * 2f64.powi(1 - n as i32)
    } else {
        let ln = statrs::function::factorial::ln_binomial(n as u64, k as u64);
        (ln + (1.0 - n as f64) * std::f64::consts::LN_2).exp()
    }
}

/// `|| h^{2 m0} - sum_{i < M} alpha_i T_{2i}(h) ||` in operator norm.
pub fn power_approx_error(h: &ComplexMatrix, m0: usize, m: usize) -> Result<f64> {
    let weights = chebyshev_weights(m0, m)?;
    let series = even_chebyshev_series(h, m)?;
    let mut approx = ComplexMatrix::zeros(h.nrows(), h.ncols());
    for (alpha, t) in weights.alphas.iter().zip(&series) {
        approx += t.scale(*alpha);
    }
    let exact = crate::linalg::matrix_power(h, 2 * m0);
    crate::linalg::operator_norm(&(exact - approx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        c, diag_real, frobenius, from_real_rows, hermitian_eig, matrix_power, top_left,
        unitarity_residual,
    };
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        frobenius(&(a - b)) <= tol
    }

    fn pauli_x() -> ComplexMatrix {
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    #[test]
    fn decompose_identity() {
        let d = decompose_contraction(&identity(2)).unwrap();
        assert!(close(&d.u0, &identity(2), 1e-14));
        assert!(close(&d.u1, &identity(2), 1e-14));
    }

    #[test]
    fn decompose_projector() {
        let d = decompose_contraction(&diag_real(&[1.0, 0.0])).unwrap();
        let mut u0 = identity(2);
        u0[(1, 1)] = c(0.0, 1.0);
        let mut u1 = identity(2);
        u1[(1, 1)] = c(0.0, -1.0);
        assert!(close(&d.u0, &u0, 1e-14), "{}", d.u0);
        assert!(close(&d.u1, &u1, 1e-14));
        assert!(close(&d.average(), &diag_real(&[1.0, 0.0]), 1e-14));
    }

    #[test]
    fn decompose_half_x() {
        let a = pauli_x().scale(0.5);
        let d = decompose_contraction(&a).unwrap();
        let r = 3f64.sqrt() / 2.0;
        assert!(close(&d.u0, &pauli_x().map(|z| z * c(0.5, r)), 1e-12));
        assert!(close(&d.u1, &pauli_x().map(|z| z * c(0.5, -r)), 1e-12));
        assert!(unitarity_residual(&d.u0) < 1e-12);
        assert!(close(&d.average(), &a, 1e-12));
    }

    #[test]
    fn decompose_rejects_expansion() {
        let a = identity(2).scale(1.1);
        assert!(matches!(
            decompose_contraction(&a),
            Err(Error::NotContraction { .. })
        ));
    }

    #[test]
    fn divider_single_slit() {
        let dc = build_divider_combiner(&[1.0], 0).unwrap();
        assert!(close(&dc.v, &identity(1), 0.0));
        assert!(close(&dc.w, &identity(1), 0.0));
    }

    #[test]
    fn divider_two_slits() {
        let dc = build_divider_combiner(&[0.5, 0.5], 1).unwrap();
        let s = 0.5f64.sqrt();
        assert!((dc.v[(0, 0)] - c(s, 0.0)).norm() < 1e-15);
        assert!((dc.v[(1, 0)] - c(s, 0.0)).norm() < 1e-15);
        assert!(unitarity_residual(&dc.v) < 1e-14);
    }

    #[test]
    fn divider_chebyshev_m0_2() {
        let dc = build_divider_combiner(&[3.0 / 8.0, 0.5, 1.0 / 8.0], 2).unwrap();
        let expect = [(3.0f64 / 8.0).sqrt(), 0.5f64.sqrt(), (1.0f64 / 8.0).sqrt(), 0.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((dc.v[(i, 0)].re - e).abs() < 1e-15);
            assert!((dc.w[(0, i)].re - e).abs() < 1e-15);
        }
        assert!((dc.scale - 1.0).abs() < 1e-15);
        assert!(unitarity_residual(&dc.v) < 1e-14);
    }

    #[test]
    fn divider_normalizes_and_keeps_scale() {
        let dc = build_divider_combiner(&[2.0, 6.0], 1).unwrap();
        assert_eq!(dc.scale, 8.0);
        assert!((dc.weights[0] - 0.25).abs() < 1e-15);
        assert!((dc.v[(1, 0)].re - 0.75f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn divider_errors() {
        assert_eq!(build_divider_combiner(&[0.0, 0.0], 1).unwrap_err(), Error::AllZeroWeights);
        assert!(matches!(
            build_divider_combiner(&[1.0, 1.0, 1.0], 1),
            Err(Error::TooManyWeights { .. })
        ));
        assert!(matches!(
            build_divider_combiner(&[1.0, -0.1], 1),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
    }

    #[test]
    fn dilation_of_unitary_keeps_ancilla() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = sample::unitary(&mut rng, 2);
        let d = dilate_contraction(&u).unwrap();
        let psi = sample::state(&mut rng, 2);
        let out = d.apply_to_ancilla_zero(&psi);
        assert!(out.rows(2, 2).norm() < 1e-7);
        assert!((out.rows(0, 2) - &u * &psi).norm() < 1e-12);
    }

    #[test]
    fn dilation_of_zero_flips_ancilla() {
        let d = dilate_contraction(&ComplexMatrix::zeros(2, 2)).unwrap();
        let expect = block2(
            &ComplexMatrix::zeros(2, 2),
            &(-identity(2)),
            &identity(2),
            &ComplexMatrix::zeros(2, 2),
        );
        assert!(close(&d.u, &expect, 1e-15));
    }

    #[test]
    fn dilation_of_half_identity() {
        let d = dilate_contraction(&identity(2).scale(0.5)).unwrap();
        let psi = StateVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let out = d.apply_to_ancilla_zero(&psi);
        let upper = out.rows(0, 2).into_owned();
        let lower = out.rows(2, 2).into_owned();
        assert!((upper.clone() - psi.map(|z| z * 0.5)).norm() < 1e-15);
        assert!((lower - psi.map(|z| z * 3f64.sqrt() / 2.0)).norm() < 1e-15);
        assert!((upper.norm_squared() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dilation_random_soundness() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..=6 {
            let b = sample::contraction(&mut rng, n);
            let d = dilate_contraction(&b).unwrap();
            assert!(unitarity_residual(&d.u) < 1e-10);
            assert!(close(&top_left(&d.u, n), &b, 0.0));
        }
    }

    #[test]
    fn walk_operator_cases() {
        let l = walk_operator(&identity(2)).unwrap();
        assert!(close(&l, &identity(4), 1e-15));
        let l = walk_operator(&ComplexMatrix::zeros(2, 2)).unwrap();
        let expect = block2(
            &ComplexMatrix::zeros(2, 2),
            &(-identity(2)),
            &identity(2),
            &ComplexMatrix::zeros(2, 2),
        );
        assert!(close(&l, &expect, 1e-15));
        let l = walk_operator(&identity(2).scale(0.5)).unwrap();
        let r = 3f64.sqrt() / 2.0;
        let expect = block2(
            &identity(2).scale(0.5),
            &identity(2).scale(-r),
            &identity(2).scale(r),
            &identity(2).scale(0.5),
        );
        assert!(close(&l, &expect, 1e-14));
        assert!(unitarity_residual(&l) < 1e-14);
    }

    #[test]
    fn walk_operator_rejects_non_hermitian() {
        let a = from_real_rows(&[&[0.0, 0.5], &[0.0, 0.0]]);
        assert!(matches!(walk_operator(&a), Err(Error::NotHermitian { .. })));
        assert!(matches!(
            walk_operator(&identity(2).scale(2.0)),
            Err(Error::NotContraction { .. })
        ));
    }

    #[test]
    fn chebyshev_small_cases() {
        let h = identity(2).scale(0.5);
        assert!(close(&chebyshev_t(0, &h).unwrap(), &identity(2), 0.0));
        assert!(close(&chebyshev_t(2, &h).unwrap(), &identity(2).scale(-0.5), 1e-15));
        // U_2(x) = 4x^2 - 1 -> 0 at x = 1/2
        assert!(frobenius(&chebyshev_u(2, &h).unwrap()) < 1e-15);
    }

    #[test]
    fn chebyshev_matches_spectral_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = sample::hermitian_contraction(&mut rng, 4);
        let eig = hermitian_eig(&h).unwrap();
        for n in 0..=9 {
            let t = chebyshev_t(n, &h).unwrap();
            let oracle = eig.apply_fn(|x| (n as f64 * x.clamp(-1.0, 1.0).acos()).cos());
            assert!(close(&t, &oracle, 1e-9), "n = {n}");
        }
    }

    #[test]
    fn even_series_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let h = sample::hermitian_contraction(&mut rng, 3);
        let series = even_chebyshev_series(&h, 4).unwrap();
        for (i, t) in series.iter().enumerate() {
            assert!(close(t, &chebyshev_t(2 * i, &h).unwrap(), 1e-12));
        }
    }

    #[test]
    fn weights_small_m0() {
        let w = chebyshev_weights(1, 2).unwrap();
        assert_eq!(w.alphas, vec![0.5, 0.5]);
        assert_eq!(w.alpha_sum, 1.0);
        let w = chebyshev_weights(2, 3).unwrap();
        assert_eq!(w.alphas, vec![3.0 / 8.0, 0.5, 1.0 / 8.0]);
        assert_eq!(w.alpha_sum, 1.0);
        for m0 in 1..=40 {
            let w = chebyshev_weights(m0, m0 + 1).unwrap();
            assert!((w.alpha_sum - 1.0).abs() < 1e-12, "m0 = {m0}");
        }
        let large = chebyshev_weights(600, 601).unwrap();
        assert!((large.alpha_sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weights_reject_bad_truncation() {
        assert!(matches!(chebyshev_weights(2, 4), Err(Error::BadTruncation { .. })));
        assert!(matches!(chebyshev_weights(2, 0), Err(Error::BadTruncation { .. })));
        assert!(chebyshev_weights(0, 1).is_err());
    }

    #[test]
    fn weights_expand_h4() {
        // T_4 = 8x^4 - 8x^2 + 1 => x^4 = 3/8 T_0 + 1/2 T_2 + 1/8 T_4
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = sample::hermitian_contraction(&mut rng, 3);
        let w = chebyshev_weights(2, 3).unwrap();
        let series = even_chebyshev_series(&h, 3).unwrap();
        let mut sum = ComplexMatrix::zeros(3, 3);
        for (a, t) in w.alphas.iter().zip(&series) {
            sum += t.scale(*a);
        }
        assert!(close(&sum, &matrix_power(&h, 4), 1e-12));
    }

    #[test]
    fn power_error_truncated_projector() {
        let h = diag_real(&[1.0, 0.0]);
        let e = power_approx_error(&h, 2, 2).unwrap();
        assert!((e - 0.125).abs() < 1e-14);
        assert!(power_approx_error(&h, 2, 3).unwrap() < 1e-14);
    }

    #[test]
    fn power_error_non_increasing_in_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let h = sample::hermitian_contraction(&mut rng, 4);
        let m0 = 6;
        let errors: Vec<f64> = (1..=m0 + 1)
            .map(|m| power_approx_error(&h, m0, m).unwrap())
            .collect();
        for w in errors.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{errors:?}");
        }
        assert!(errors[m0] < 1e-10);
    }
}
