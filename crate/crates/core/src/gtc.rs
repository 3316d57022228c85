//! Ground-state preparation by Chebyshev filtering.
//!
//! The shifted Hamiltonian `H = (1 + E) I - H~` has the ground state of `H~`
//! as its dominant eigenvector, so `H^{M0} phi` converges to it. `H^{M0}` is
//! expanded in even Chebyshev polynomials `T_{2i}(H)`, each realized as the
//! top-left block of the walk-operator power `L^{2i}`, and the truncated sum
//! is run as a subwave-projection program with a single dilation ancilla.

use serde::Serialize;

use crate::analysis::TimingModel;
use crate::error::{Error, Result};
use crate::lcu::{chebyshev_weights, even_chebyshev_series, walk_operator_with_tol, ChebyshevWeights};
use crate::linalg::{
    ensure_contraction, ensure_hermitian, hermitian_eig_with_tol, identity, matrix_power,
    normalize, phase_distance, qubits_for, ComplexMatrix, StateVector, C64, DEFAULT_TOLERANCE,
};
use crate::simulator::{run_swp_exact, LcuProgram, RegisterLayout, RunTrace};

/// A Hamiltonian with spectrum in `[0, 1]`, a lower bound `E` on its ground
/// energy and a trial state. Spectral data comes from a dense eigensolver and
/// serves as validation and as the reference for fidelities.
#[derive(Debug, Clone)]
pub struct GroundStateProblem {
    pub h_tilde: ComplexMatrix,
    pub e_bound: f64,
    pub lambda0: f64,
    /// `lambda0 - E`.
    pub delta_e: f64,
    /// Spacing between the two lowest eigenvalues of `h_tilde`.
    pub gap: f64,
    pub trial: StateVector,
    /// `|<lambda0|phi>|`.
    pub phi0: f64,
    pub epsilon: f64,
    pub ground_state: StateVector,
    pub tolerance: f64,
}

impl GroundStateProblem {
    /// `trial = None` selects the uniform superposition.
    pub fn new(
        h_tilde: ComplexMatrix,
        e_bound: f64,
        trial: Option<StateVector>,
        epsilon: f64,
    ) -> Result<Self> {
        Self::with_tolerance(h_tilde, e_bound, trial, epsilon, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(
        h_tilde: ComplexMatrix,
        e_bound: f64,
        trial: Option<StateVector>,
        epsilon: f64,
        tolerance: f64,
    ) -> Result<Self> {
        let dim = ensure_hermitian(&h_tilde, tolerance)?;
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::BadParameters(format!(
                "Hamiltonian dimension {dim} is not a power of two"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::BadParameters(format!("epsilon {epsilon} outside (0, 1)")));
        }
        let eig = hermitian_eig_with_tol(&h_tilde, tolerance)?;
        check_unit_spectrum(&eig.eigenvalues, tolerance)?;
        let lambda0 = eig.eigenvalues[0];
        check_lower_bound(e_bound, lambda0, tolerance)?;
        let gap = if dim > 1 {
            let lambda1 = eig.eigenvalues[1];
            if lambda1 - lambda0 <= tolerance {
                return Err(Error::DegenerateGroundState { lambda0, lambda1 });
            }
            lambda1 - lambda0
        } else {
            1.0
        };
        let trial = match trial {
            Some(t) => {
                if t.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        actual: t.len(),
                    });
                }
                normalize(&t).ok_or(Error::UnnormalizedInput { norm: 0.0 })?
            }
            None => StateVector::from_element(dim, C64::new(1.0 / (dim as f64).sqrt(), 0.0)),
        };
        let ground_state: StateVector = eig.eigenvectors.column(0).into_owned();
        let phi0 = ground_state.dotc(&trial).norm();
        if phi0 <= tolerance {
            return Err(Error::BadParameters(
                "trial state is orthogonal to the ground state".into(),
            ));
        }
        Ok(GroundStateProblem {
            h_tilde,
            e_bound,
            lambda0,
            delta_e: lambda0 - e_bound,
            gap: gap.min(1.0),
            trial,
            phi0,
            epsilon,
            ground_state,
            tolerance,
        })
    }

    pub fn dim(&self) -> usize {
        self.h_tilde.nrows()
    }

    /// `|<lambda0|state>|`.
    pub fn fidelity(&self, state: &StateVector) -> f64 {
        self.ground_state.dotc(state).norm()
    }
}

fn check_unit_spectrum(eigenvalues: &[f64], tol: f64) -> Result<()> {
    match eigenvalues
        .iter()
        .find(|&&l| l < -tol || l > 1.0 + tol)
    {
        Some(&eigenvalue) => Err(Error::SpectrumOutOfRange { eigenvalue }),
        None => Ok(()),
    }
}

fn check_lower_bound(e_bound: f64, lambda0: f64, tol: f64) -> Result<()> {
    if !(e_bound >= 0.0) || e_bound > lambda0 + tol {
        return Err(Error::BadLowerBound { e_bound, lambda0 });
    }
    Ok(())
}

/// `H = (1 + E) I - H~`; the spectrum of `H` lies in `[E, 1 - delta_E]`.
pub fn shift_hamiltonian(h_tilde: &ComplexMatrix, e_bound: f64) -> Result<ComplexMatrix> {
    shift_hamiltonian_with_tol(h_tilde, e_bound, DEFAULT_TOLERANCE)
}

pub fn shift_hamiltonian_with_tol(
    h_tilde: &ComplexMatrix,
    e_bound: f64,
    tol: f64,
) -> Result<ComplexMatrix> {
    let n = ensure_hermitian(h_tilde, tol)?;
    let eig = hermitian_eig_with_tol(h_tilde, tol)?;
    check_unit_spectrum(&eig.eigenvalues, tol)?;
    if n > 0 {
        check_lower_bound(e_bound, eig.eigenvalues[0], tol)?;
    }
    let h = identity(n).scale(1.0 + e_bound) - h_tilde;
    Ok((&h + h.adjoint()).scale(0.5))
}

/// Constants inside the logarithms of the iteration-count rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationConstants {
    /// `M0 >= ln(power_log / (phi0 eps)) / gap`.
    pub power_log: f64,
    /// `M = ceil(sqrt(2 m0 ln(terms_log / (phi0 eps))))`.
    pub terms_log: f64,
}

impl Default for IterationConstants {
    fn default() -> Self {
        IterationConstants {
            power_log: 2.0,
            terms_log: 4.0,
        }
    }
}

/// Power count `M0` (even) and number of Chebyshev terms `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IterationCounts {
    #[serde(rename = "M0")]
    pub power: usize,
    #[serde(rename = "M")]
    pub terms: usize,
}

impl IterationCounts {
    pub fn m0(&self) -> usize {
        self.power / 2
    }
}

pub fn choose_iteration_counts(gap: f64, phi0: f64, epsilon: f64) -> Result<IterationCounts> {
    choose_iteration_counts_with(gap, phi0, epsilon, IterationConstants::default())
}

pub fn choose_iteration_counts_with(
    gap: f64,
    phi0: f64,
    epsilon: f64,
    constants: IterationConstants,
) -> Result<IterationCounts> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(Error::BadParameters(format!("gap {gap} outside (0, 1]")));
    }
    if !(phi0 > 0.0 && phi0 <= 1.0 + DEFAULT_TOLERANCE) {
        return Err(Error::BadParameters(format!("phi0 {phi0} outside (0, 1]")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::BadParameters(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let scale = phi0.min(1.0) * epsilon;
    let powers = ((constants.power_log / scale).ln() / gap).max(0.0);
    let m0 = ((powers / 2.0).ceil() as usize).max(1);
    let log_terms = (constants.terms_log / scale).ln().max(0.0);
    let terms = ((2.0 * m0 as f64 * log_terms).sqrt().ceil() as usize).clamp(1, m0 + 1);
    Ok(IterationCounts {
        power: 2 * m0,
        terms,
    })
}

/// The circuit that prepares `sum_{i<M} (alpha_i / alpha) T_{2i}(H) phi`.
#[derive(Debug, Clone)]
pub struct GtcPlan {
    pub h: ComplexMatrix,
    pub m0: usize,
    pub counts: IterationCounts,
    pub weights: ChebyshevWeights,
    pub program: LcuProgram,
}

impl GtcPlan {
    pub fn total_qubits(&self) -> usize {
        self.program.layout.qubits()
    }
}

/// Qubits used by the doubled-space walk construction this circuit replaces:
/// `2 log2 N + log2 M + 3`.
pub fn doubled_space_qubits(work_qubits: usize, terms: usize) -> usize {
    2 * work_qubits + qubits_for(terms) + 3
}

/// Gate time of `L^{2i}` in matrix-multiplication units (at least 1).
pub fn walk_power_time(i: usize) -> f64 {
    (2 * i).max(1) as f64
}

pub fn build_gtc_program(h: &ComplexMatrix, m0: usize, terms: usize) -> Result<GtcPlan> {
    build_gtc_program_with_tol(h, m0, terms, DEFAULT_TOLERANCE)
}

/// Weights `alpha_i`, operators `T_{2i}(h)` and their dilations `L^{2i}`.
pub fn build_gtc_program_with_tol(
    h: &ComplexMatrix,
    m0: usize,
    terms: usize,
    tol: f64,
) -> Result<GtcPlan> {
    let n = ensure_hermitian(h, tol)?;
    ensure_contraction(h, tol)?;
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::BadParameters(format!(
            "Hamiltonian dimension {n} is not a power of two"
        )));
    }
    let weights = chebyshev_weights(m0, terms)?;
    let operators = even_chebyshev_series(h, terms)?;
    let walk = walk_operator_with_tol(h, tol)?;
    let walk_sq = &walk * &walk;
    let mut dilations = Vec::with_capacity(terms);
    let mut power = identity(2 * n);
    for _ in 0..terms {
        dilations.push(power.clone());
        power = &power * &walk_sq;
    }
    let layout = RegisterLayout::new(qubits_for(terms), 1, n.trailing_zeros() as usize);
    let times = (0..terms).map(walk_power_time).collect();
    let program = LcuProgram::with_dilations(
        layout,
        weights.alphas.clone(),
        operators,
        dilations,
        times,
        tol,
    )?;
    Ok(GtcPlan {
        h: h.clone(),
        m0,
        counts: IterationCounts {
            power: 2 * m0,
            terms,
        },
        weights,
        program,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GtcOptions {
    pub m0_override: Option<usize>,
    pub terms_override: Option<usize>,
    /// Use this gap instead of the eigensolver's.
    pub gap_override: Option<f64>,
    /// Use this overlap instead of the eigensolver's.
    pub phi0_override: Option<f64>,
    pub constants: Option<IterationConstants>,
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub state: StateVector,
    pub fidelity: f64,
    /// `min_theta || state - e^{i theta} |lambda0> ||`.
    pub distance: f64,
    pub trace: RunTrace,
    pub plan: GtcPlan,
    pub timing: TimingModel,
}

/// Shift, choose counts, build the program and run it exactly.
pub fn prepare_ground_state(problem: &GroundStateProblem) -> Result<GroundStateResult> {
    prepare_ground_state_with(problem, GtcOptions::default())
}

pub fn prepare_ground_state_with(
    problem: &GroundStateProblem,
    options: GtcOptions,
) -> Result<GroundStateResult> {
    let tol = problem.tolerance;
    let h = shift_hamiltonian_with_tol(&problem.h_tilde, problem.e_bound, tol)?;
    let gap = options.gap_override.unwrap_or(problem.gap);
    let phi0 = options.phi0_override.unwrap_or(problem.phi0);
    let chosen = choose_iteration_counts_with(
        gap,
        phi0,
        problem.epsilon,
        options.constants.unwrap_or_default(),
    )?;
    let m0 = options.m0_override.unwrap_or(chosen.m0());
    if m0 == 0 {
        return Err(Error::BadParameters("m0 must be at least 1".into()));
    }
    let terms = match (options.terms_override, options.m0_override) {
        (Some(t), _) => t,
        (None, Some(_)) => m0 + 1,
        (None, None) => chosen.terms,
    };
    let plan = build_gtc_program_with_tol(&h, m0, terms, tol)?;
    let trace = run_swp_exact(&plan.program, &problem.trial)?.into_success()?;
    let state = trace
        .final_state
        .clone()
        .ok_or(Error::ZeroProbabilityProjection { probability: 0.0 })?;
    let timing = TimingModel::evaluate(
        trace.step_probabilities.clone(),
        plan.program.times.clone(),
        plan.program.order.clone(),
    )?;
    Ok(GroundStateResult {
        fidelity: problem.fidelity(&state),
        distance: phase_distance(&state, &problem.ground_state),
        state,
        trace,
        plan,
        timing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub m0: usize,
    /// Distance of normalized `H^{2 m0} phi` from the ground state.
    pub error: f64,
    pub fidelity: f64,
}

/// Dense power filter `H^{2 m0} phi` for each `m0`, compared with the
/// ground state.
pub fn verify_projector_convergence(
    problem: &GroundStateProblem,
    m0_range: impl IntoIterator<Item = usize>,
) -> Result<Vec<ConvergenceRow>> {
    let h = shift_hamiltonian_with_tol(&problem.h_tilde, problem.e_bound, problem.tolerance)?;
    m0_range
        .into_iter()
        .map(|m0| {
            let filtered = matrix_power(&h, 2 * m0) * &problem.trial;
            let state =
                normalize(&filtered).ok_or(Error::ZeroProbabilityProjection { probability: 0.0 })?;
            Ok(ConvergenceRow {
                m0,
                error: phase_distance(&state, &problem.ground_state),
                fidelity: problem.fidelity(&state),
            })
        })
        .collect()
}
