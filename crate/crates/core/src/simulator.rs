//! Statevector simulation of the `[first group | second group | work]`
//! register. The first ancilla group selects the slit, the second group is
//! the dilation ancilla that subwave projections measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::closed_form_step_probs;
use crate::error::{Error, Result};
use crate::lcu::{build_divider_combiner, dilate_contraction_with_tol, DividerCombiner};
use crate::linalg::{
    ensure_contraction, ensure_unitary, expectation, frobenius, identity, normalize, top_left,
    ComplexMatrix, StateVector, ZERO, DEFAULT_TOLERANCE,
};

/// Projections with probability below this are treated as annihilating.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Qubit counts of the two ancilla groups and the work register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegisterLayout {
    pub m: usize,
    pub p: usize,
    pub n: usize,
}

impl RegisterLayout {
    pub fn new(m: usize, p: usize, n: usize) -> Self {
        RegisterLayout { m, p, n }
    }

    pub fn slits(&self) -> usize {
        1 << self.m
    }

    pub fn ancilla_states(&self) -> usize {
        1 << self.p
    }

    pub fn work_dim(&self) -> usize {
        1 << self.n
    }

    /// Dimension of one slit block (second group and work register).
    pub fn block_dim(&self) -> usize {
        1 << (self.p + self.n)
    }

    pub fn dim(&self) -> usize {
        1 << (self.m + self.p + self.n)
    }

    pub fn qubits(&self) -> usize {
        self.m + self.p + self.n
    }
}

/// A weighted list of contractions `B_i` with the unitaries `U_i` that
/// realize them on `|0>^p (x) psi`, ready to run.
#[derive(Debug, Clone)]
pub struct LcuProgram {
    pub layout: RegisterLayout,
    /// Weights as supplied (not normalized).
    pub weights: Vec<f64>,
    pub operators: Vec<ComplexMatrix>,
    pub dilations: Vec<ComplexMatrix>,
    pub divider_combiner: DividerCombiner,
    pub times: Vec<f64>,
    pub order: Vec<usize>,
    pub tolerance: f64,
}

impl LcuProgram {
    /// Builds dilations internally: the operator itself when `p = 0`
    /// (it must then be unitary), otherwise the one-qubit block dilation
    /// padded with identity on the remaining second-group states.
    pub fn new(
        layout: RegisterLayout,
        weights: Vec<f64>,
        operators: Vec<ComplexMatrix>,
        times: Vec<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        let dilations = operators
            .iter()
            .map(|b| dilation_for_layout(&layout, b, tolerance))
            .collect::<Result<Vec<_>>>()?;
        Self::with_dilations(layout, weights, operators, dilations, times, tolerance)
    }

    /// Uses caller-supplied dilations; each must be unitary on the second
    /// group plus work register and carry its operator in the top-left block.
    pub fn with_dilations(
        layout: RegisterLayout,
        weights: Vec<f64>,
        operators: Vec<ComplexMatrix>,
        dilations: Vec<ComplexMatrix>,
        times: Vec<f64>,
        tolerance: f64,
    ) -> Result<Self> {
        let count = operators.len();
        if count == 0 {
            return Err(Error::InvalidProgram("program has no operators".into()));
        }
        if count > layout.slits() {
            return Err(Error::TooManyWeights {
                count,
                capacity: layout.slits(),
            });
        }
        if weights.len() != count {
            return Err(Error::LengthMismatch {
                what: format!("{} weights for {} operators", weights.len(), count),
            });
        }
        if times.len() != count {
            return Err(Error::LengthMismatch {
                what: format!("{} times for {} operators", times.len(), count),
            });
        }
        if dilations.len() != count {
            return Err(Error::LengthMismatch {
                what: format!("{} dilations for {} operators", dilations.len(), count),
            });
        }
        if let Some(t) = times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidProgram(format!("gate time {t} is not positive")));
        }
        let n = layout.work_dim();
        for (b, u) in operators.iter().zip(&dilations) {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: b.nrows(),
                });
            }
            ensure_contraction(b, tolerance)?;
            if u.nrows() != layout.block_dim() {
                return Err(Error::DimensionMismatch {
                    expected: layout.block_dim(),
                    actual: u.nrows(),
                });
            }
            ensure_unitary(u, tolerance)?;
            let residual = frobenius(&(top_left(u, n) - b));
            if residual > tolerance {
                return Err(Error::InvalidProgram(format!(
                    "dilation top-left block differs from its operator by {residual:e}"
                )));
            }
        }
        let divider_combiner = build_divider_combiner(&weights, layout.m)?;
        Ok(LcuProgram {
            layout,
            weights,
            operators,
            dilations,
            divider_combiner,
            times,
            order: (0..count).collect(),
            tolerance,
        })
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Result<Self> {
        validate_order(&order, self.len())?;
        self.order = order;
        Ok(self)
    }

    /// Number of gates `M` (slits beyond it carry zero weight).
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Normalized coefficients `c_i = |V_{i0}|^2` of the gates.
    pub fn coefficients(&self) -> &[f64] {
        &self.divider_combiner.weights[..self.len()]
    }

    /// `A = sum_i c_i B_i` with normalized coefficients, computed densely.
    pub fn combined_operator(&self) -> ComplexMatrix {
        let n = self.layout.work_dim();
        let mut a = ComplexMatrix::zeros(n, n);
        for (c, b) in self.coefficients().iter().zip(&self.operators) {
            a += b.scale(*c);
        }
        a
    }

    /// `b_i = <psi| B_i^dagger B_i |psi>` for every gate.
    pub fn survival_probabilities(&self, psi: &StateVector) -> Vec<f64> {
        self.operators
            .iter()
            .map(|b| (b * psi).norm_squared())
            .collect()
    }

    /// `<psi| A^dagger A |psi>`.
    pub fn success_probability(&self, psi: &StateVector) -> f64 {
        let a = self.combined_operator();
        expectation(&(a.adjoint() * &a), psi)
    }
}

pub fn validate_order(order: &[usize], count: usize) -> Result<()> {
    if order.len() != count {
        return Err(Error::LengthMismatch {
            what: format!("order has {} entries for {} gates", order.len(), count),
        });
    }
    let mut seen = vec![false; count];
    for &g in order {
        if g >= count || seen[g] {
            return Err(Error::InvalidProgram(format!(
                "order {order:?} is not a permutation of 0..{count}"
            )));
        }
        seen[g] = true;
    }
    Ok(())
}

fn dilation_for_layout(layout: &RegisterLayout, b: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let n = layout.work_dim();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: b.nrows(),
        });
    }
    if layout.p == 0 {
        ensure_unitary(b, tol).map_err(|_| {
            Error::InvalidProgram("p = 0 requires every operator to be unitary".into())
        })?;
        return Ok(b.clone());
    }
    let d = dilate_contraction_with_tol(b, tol)?;
    let mut u = identity(layout.block_dim());
    u.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&d.u);
    Ok(u)
}

/// Full register state with its layout.
#[derive(Debug, Clone)]
pub struct Register {
    pub layout: RegisterLayout,
    pub amplitudes: StateVector,
}

impl Register {
    /// `|0>^{m+p} (x) psi`.
    pub fn init(layout: RegisterLayout, psi: &StateVector) -> Result<Self> {
        init_register(layout, psi).map(|amplitudes| Register { layout, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `(u (x) I)` on the first group.
    pub fn apply_first_group(&mut self, u: &ComplexMatrix) -> Result<()> {
        let slits = self.layout.slits();
        if u.nrows() != slits || u.ncols() != slits {
            return Err(Error::DimensionMismatch {
                expected: slits,
                actual: u.nrows(),
            });
        }
        ensure_unitary(u, DEFAULT_TOLERANCE)?;
        let block = self.layout.block_dim();
        let old = &self.amplitudes;
        let mut new = StateVector::zeros(old.len());
        for i in 0..slits {
            for j in 0..slits {
                let uij = u[(i, j)];
                if uij == ZERO {
                    continue;
                }
                for r in 0..block {
                    new[i * block + r] += uij * old[j * block + r];
                }
            }
        }
        self.amplitudes = new;
        Ok(())
    }

    /// `G_i = |i><i| (x) (U - I) + I`: multiplies slit block `i` by `u`.
    pub fn apply_controlled(&mut self, slit: usize, u: &ComplexMatrix) -> Result<()> {
        let slits = self.layout.slits();
        if slit >= slits {
            return Err(Error::SlitOutOfRange { slit, slits });
        }
        let block = self.layout.block_dim();
        if u.nrows() != block || u.ncols() != block {
            return Err(Error::DimensionMismatch {
                expected: block,
                actual: u.nrows(),
            });
        }
        ensure_unitary(u, DEFAULT_TOLERANCE)?;
        let range = slit * block..(slit + 1) * block;
        let updated = u * self.amplitudes.rows(range.start, block);
        self.amplitudes.rows_mut(range.start, block).copy_from(&updated);
        Ok(())
    }

    /// Keeps the amplitudes selected by `keep` and renormalizes. The returned
    /// probability is the ratio of the kept squared norm to the total.
    fn project(&mut self, keep: impl Fn(usize) -> bool) -> Result<f64> {
        let total = self.amplitudes.norm_squared();
        let mut kept = 0.0;
        for (idx, z) in self.amplitudes.iter_mut().enumerate() {
            if keep(idx) {
                kept += z.norm_sqr();
            } else {
                *z = ZERO;
            }
        }
        let probability = if total > 0.0 { kept / total } else { 0.0 };
        if probability < ZERO_PROBABILITY {
            return Err(Error::ZeroProbabilityProjection { probability });
        }
        let scale = kept.sqrt();
        self.amplitudes.unscale_mut(scale);
        Ok(probability)
    }

    /// Projects the second group onto `|0>^p`.
    pub fn project_second_group(&mut self) -> Result<f64> {
        let work = self.layout.work_dim();
        let anc = self.layout.ancilla_states();
        self.project(|idx| (idx / work).is_multiple_of(anc))
    }

    /// Projects the first group onto `|0>^m`.
    pub fn project_first_group(&mut self) -> Result<f64> {
        let block = self.layout.block_dim();
        self.project(|idx| idx / block == 0)
    }

    /// Projects both ancilla groups onto zero at once.
    pub fn project_all_ancillas(&mut self) -> Result<f64> {
        let work = self.layout.work_dim();
        self.project(|idx| idx < work)
    }

    /// Work-register amplitudes with both ancilla groups in `|0>`.
    pub fn work_state(&self) -> StateVector {
        self.amplitudes.rows(0, self.layout.work_dim()).into_owned()
    }
}

/// `|0>^{m+p} (x) psi` as a flat amplitude vector.
pub fn init_register(layout: RegisterLayout, psi: &StateVector) -> Result<StateVector> {
    let n = layout.work_dim();
    if psi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: psi.len(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > DEFAULT_TOLERANCE {
        return Err(Error::UnnormalizedInput { norm });
    }
    let mut state = StateVector::zeros(layout.dim());
    state.rows_mut(0, n).copy_from(psi);
    Ok(state)
}

/// Outcome of one execution of a program.
#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    /// Gate index applied at each step.
    pub gate_order: Vec<usize>,
    /// Simulated `p_0 .. p_M` (the last entry is the first-group projection).
    pub step_probabilities: Vec<f64>,
    /// The same probabilities assembled from `b_i`, `c_i` and `<A^dagger A>`.
    pub closed_form_probabilities: Vec<f64>,
    /// Per-step success flags; empty for exact runs.
    pub outcomes: Vec<bool>,
    pub restarts: u64,
    pub elapsed_time: f64,
    #[serde(with = "crate::json::opt_vector")]
    pub final_state: Option<StateVector>,
    pub overall_probability: f64,
    /// A projection had (numerically) zero probability; no final state.
    pub annihilated: bool,
}

impl RunTrace {
    /// Converts an annihilated trace into `ZeroProbabilityProjection`.
    pub fn into_success(self) -> Result<Self> {
        if self.annihilated {
            return Err(Error::ZeroProbabilityProjection {
                probability: self.overall_probability,
            });
        }
        Ok(self)
    }

    /// Products `p_0 ... p_k` for every step.
    pub fn cumulative_probabilities(&self) -> Vec<f64> {
        self.step_probabilities
            .iter()
            .scan(1.0, |acc, p| {
                *acc *= p;
                Some(*acc)
            })
            .collect()
    }
}

fn check_input(program: &LcuProgram, psi: &StateVector) -> Result<Register> {
    validate_order(&program.order, program.len())?;
    Register::init(program.layout, psi)
}

/// Divider, then for each gate in `program.order` the controlled dilation
/// followed by a second-group projection, then the combiner and the
/// first-group projection. Every projection is taken deterministically and
/// its probability recorded.
pub fn run_swp_exact(program: &LcuProgram, psi: &StateVector) -> Result<RunTrace> {
    let mut reg = check_input(program, psi)?;
    let closed = closed_form_for(program, psi)?;
    let mut probs = Vec::with_capacity(program.len() + 1);
    let mut trace = RunTrace {
        gate_order: program.order.clone(),
        step_probabilities: vec![],
        closed_form_probabilities: closed,
        outcomes: vec![],
        restarts: 0,
        elapsed_time: 0.0,
        final_state: None,
        overall_probability: 0.0,
        annihilated: false,
    };

    reg.apply_first_group(&program.divider_combiner.v)?;
    for &gate in &program.order {
        reg.apply_controlled(gate, &program.dilations[gate])?;
        trace.elapsed_time += program.times[gate];
        match reg.project_second_group() {
            Ok(p) => probs.push(p),
            Err(Error::ZeroProbabilityProjection { probability }) => {
                probs.push(probability);
                trace.annihilated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if !trace.annihilated {
        reg.apply_first_group(&program.divider_combiner.w)?;
        match reg.project_first_group() {
            Ok(p) => {
                probs.push(p);
                trace.final_state = normalize(&reg.work_state());
            }
            Err(Error::ZeroProbabilityProjection { probability }) => {
                probs.push(probability);
                trace.annihilated = true;
            }
            Err(e) => return Err(e),
        }
    }
    trace.overall_probability = probs.iter().product();
    trace.step_probabilities = probs;
    Ok(trace)
}

/// Closed-form step probabilities for the program's order.
pub fn closed_form_for(program: &LcuProgram, psi: &StateVector) -> Result<Vec<f64>> {
    closed_form_step_probs(
        program.coefficients(),
        &program.survival_probabilities(psi),
        &program.order,
        program.success_probability(psi),
    )
}

/// Ordinary DQC: all controlled gates, the combiner, then one projection of
/// both ancilla groups onto zero.
pub fn run_final_projection(program: &LcuProgram, psi: &StateVector) -> Result<RunTrace> {
    let mut reg = check_input(program, psi)?;
    reg.apply_first_group(&program.divider_combiner.v)?;
    let mut elapsed = 0.0;
    for &gate in &program.order {
        reg.apply_controlled(gate, &program.dilations[gate])?;
        elapsed += program.times[gate];
    }
    reg.apply_first_group(&program.divider_combiner.w)?;
    let (probability, annihilated) = match reg.project_all_ancillas() {
        Ok(p) => (p, false),
        Err(Error::ZeroProbabilityProjection { probability }) => (probability, true),
        Err(e) => return Err(e),
    };
    Ok(RunTrace {
        gate_order: program.order.clone(),
        step_probabilities: vec![probability],
        closed_form_probabilities: vec![program.success_probability(psi)],
        outcomes: vec![],
        restarts: 0,
        elapsed_time: elapsed,
        final_state: if annihilated { None } else { normalize(&reg.work_state()) },
        overall_probability: probability,
        annihilated,
    })
}

/// Aggregate statistics of a seeded Monte Carlo run of the restart process.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloSummary {
    pub seed: u64,
    pub trials: usize,
    pub gate_order: Vec<usize>,
    /// Exact `p_0 .. p_M` each attempt is sampled with.
    pub exact_step_probabilities: Vec<f64>,
    /// Times each step was reached, over all attempts of all trials.
    pub step_attempts: Vec<u64>,
    pub step_successes: Vec<u64>,
    pub empirical_step_probabilities: Vec<f64>,
    pub mean_attempts: f64,
    pub attempts_std_error: f64,
    pub mean_restarts: f64,
    pub mean_elapsed_time: f64,
    pub elapsed_std_error: f64,
}

struct TrialOutcome {
    attempts: u64,
    elapsed: f64,
    reached: Vec<u64>,
    succeeded: Vec<u64>,
}

/// Gives up when the expected number of attempts over all trials exceeds this.
const MAX_EXPECTED_ATTEMPTS: f64 = 1e9;

/// Restart-until-success simulation of the subwave-projection algorithm.
///
/// After a successful projection the post-measurement state is fixed, so the
/// conditional probability of every step is the same on every attempt; the
/// exact run supplies those and each trial samples outcomes from them. A
/// failed attempt costs the times of all gates applied so far (including the
/// failing step's own gate); divider, combiner and measurements are free.
/// Trial `k` draws from the ChaCha stream `k` of `seed`, so results do not
/// depend on scheduling.
pub fn run_swp_montecarlo(
    program: &LcuProgram,
    psi: &StateVector,
    seed: u64,
    trials: usize,
) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::BadParameters("trials must be at least 1".into()));
    }
    let exact = run_swp_exact(program, psi)?.into_success()?;
    let probs = exact.step_probabilities.clone();
    let overall: f64 = probs.iter().product();
    if trials as f64 / overall > MAX_EXPECTED_ATTEMPTS {
        return Err(Error::BadParameters(format!(
            "success probability {overall:e} needs too many attempts for {trials} trials"
        )));
    }
    let step_times: Vec<f64> = program.order.iter().map(|&g| program.times[g]).collect();

    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(seed, trial as u64, &probs, &step_times))
        .collect();

    let steps = probs.len();
    let mut reached = vec![0u64; steps];
    let mut succeeded = vec![0u64; steps];
    let (mut sum_a, mut sum_a2, mut sum_t, mut sum_t2) = (0.0, 0.0, 0.0, 0.0);
    for o in &outcomes {
        for k in 0..steps {
            reached[k] += o.reached[k];
            succeeded[k] += o.succeeded[k];
        }
        let a = o.attempts as f64;
        sum_a += a;
        sum_a2 += a * a;
        sum_t += o.elapsed;
        sum_t2 += o.elapsed * o.elapsed;
    }
    let n = trials as f64;
    let std_error = |sum: f64, sum2: f64| {
        if trials < 2 {
            return 0.0;
        }
        let mean = sum / n;
        let var = ((sum2 - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    };
    let empirical = reached
        .iter()
        .zip(&succeeded)
        .map(|(&r, &s)| if r == 0 { f64::NAN } else { s as f64 / r as f64 })
        .collect();
    Ok(MonteCarloSummary {
        seed,
        trials,
        gate_order: program.order.clone(),
        exact_step_probabilities: probs,
        step_attempts: reached,
        step_successes: succeeded,
        empirical_step_probabilities: empirical,
        mean_attempts: sum_a / n,
        attempts_std_error: std_error(sum_a, sum_a2),
        mean_restarts: sum_a / n - 1.0,
        mean_elapsed_time: sum_t / n,
        elapsed_std_error: std_error(sum_t, sum_t2),
    })
}

/// `step_times` has one entry per gate step; the final projection step
/// has no gate of its own.
fn run_trial(seed: u64, trial: u64, probs: &[f64], step_times: &[f64]) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let steps = probs.len();
    let mut out = TrialOutcome {
        attempts: 0,
        elapsed: 0.0,
        reached: vec![0; steps],
        succeeded: vec![0; steps],
    };
    loop {
        out.attempts += 1;
        let mut ok = true;
        for k in 0..steps {
            if let Some(t) = step_times.get(k) {
                out.elapsed += t;
            }
            out.reached[k] += 1;
            if rng.random::<f64>() < probs[k] {
                out.succeeded[k] += 1;
            } else {
                ok = false;
                break;
            }
        }
        if ok {
            return out;
        }
    }
}
