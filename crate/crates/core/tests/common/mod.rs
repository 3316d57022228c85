//! Instances shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use dqc_core::linalg::{c, identity, qubits_for, ComplexMatrix, StateVector, DEFAULT_TOLERANCE};
use dqc_core::sample;
use dqc_core::simulator::{LcuProgram, RegisterLayout};
use rand::Rng;

pub fn basis(dim: usize, k: usize) -> StateVector {
    let mut v = StateVector::zeros(dim);
    v[k] = c(1.0, 0.0);
    v
}

/// Random program with 1 to 4 gates on 1 to 3 work qubits. Weights are
/// positive except that one gate in five gets weight zero (when another
/// gate keeps the total positive).
pub fn random_program<R: Rng>(rng: &mut R) -> (LcuProgram, StateVector) {
    let count = rng.random_range(1..=4usize);
    let n = rng.random_range(1..=3usize);
    let dim = 1 << n;
    let mut weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..2.0)).collect();
    if count > 1 && rng.random_bool(0.2) {
        weights[rng.random_range(0..count)] = 0.0;
    }
    let operators: Vec<ComplexMatrix> = (0..count).map(|_| sample::contraction(rng, dim)).collect();
    let times: Vec<f64> = (0..count).map(|_| rng.random_range(0.5..3.0)).collect();
    let m = qubits_for(count) + rng.random_range(0..=1usize);
    let program = LcuProgram::new(
        RegisterLayout::new(m, 1, n),
        weights,
        operators,
        times,
        DEFAULT_TOLERANCE,
    )
    .expect("random program is valid");
    let mut order: Vec<usize> = (0..count).collect();
    for i in (1..count).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let program = program.with_order(order).expect("permutation");
    (program, sample::state(rng, dim))
}

/// Two gates with equal weights, `B_0 = 0` and `B_1 = I/sqrt 2`, on `|0>`:
/// every step succeeds with probability one half.
pub fn half_half_half() -> (LcuProgram, StateVector) {
    let program = LcuProgram::new(
        RegisterLayout::new(1, 1, 1),
        vec![0.5, 0.5],
        vec![
            ComplexMatrix::zeros(2, 2),
            identity(2).scale(0.5f64.sqrt()),
        ],
        vec![1.0, 1.0],
        DEFAULT_TOLERANCE,
    )
    .unwrap();
    (program, basis(2, 0))
}

/// One gate `B = I/2`: the subwave projection succeeds with probability 1/4.
pub fn single_quarter() -> (LcuProgram, StateVector) {
    let program = LcuProgram::new(
        RegisterLayout::new(0, 1, 1),
        vec![1.0],
        vec![identity(2).scale(0.5)],
        vec![1.0],
        DEFAULT_TOLERANCE,
    )
    .unwrap();
    (program, basis(2, 0))
}

/// `B_0 = I`, `B_1 = I/2` with equal weights, so `b = (1, 1/4)`.
pub fn order_instance() -> (LcuProgram, StateVector) {
    let program = LcuProgram::new(
        RegisterLayout::new(1, 1, 1),
        vec![0.5, 0.5],
        vec![identity(2), identity(2).scale(0.5)],
        vec![1.0, 1.0],
        DEFAULT_TOLERANCE,
    )
    .unwrap();
    (program, basis(2, 0))
}

/// `A = sum_i c_i B_i` with normalized weights, built directly.
pub fn combined(program: &LcuProgram) -> ComplexMatrix {
    let total: f64 = program.weights.iter().sum();
    let dim = program.operators[0].nrows();
    program
        .weights
        .iter()
        .zip(&program.operators)
        .fold(ComplexMatrix::zeros(dim, dim), |acc, (w, b)| acc + b.scale(w / total))
}

/// Step probabilities from the surviving-weight recurrence.
pub fn reference_step_probs(program: &LcuProgram, psi: &StateVector) -> Vec<f64> {
    let total: f64 = program.weights.iter().sum();
    let mut surviving = 1.0;
    let mut probs = vec![];
    for &g in &program.order {
        let cg = program.weights[g] / total;
        let bg = (&program.operators[g] * psi).norm_squared();
        let next = surviving - cg + bg * cg;
        probs.push(next / surviving);
        surviving = next;
    }
    probs.push((combined(program) * psi).norm_squared() / surviving);
    probs
}

/// Eigenvalues `lambda0` in `[0, 0.3]`, the rest in `[lambda0 + 0.3, 1]`.
pub fn gapped_hamiltonian<R: Rng>(rng: &mut R, dim: usize) -> (ComplexMatrix, f64) {
    let lambda0 = rng.random_range(0.0..0.3);
    let mut values = vec![lambda0];
    values.extend((1..dim).map(|_| rng.random_range(lambda0 + 0.3..=1.0)));
    (sample::with_spectrum(rng, &values), lambda0)
}
