//! Closed-form step probabilities, expected runtimes of the restart process,
//! gate-order search and the uniform-model speedup table.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::StateVector;
use crate::simulator::{validate_order, LcuProgram};

/// Slack allowed on probability-like inputs before rejecting them.
const PROB_SLACK: f64 = 1e-9;

/// Subwave-projection success probabilities `p_0 .. p_M` for the given
/// execution order.
///
/// Before step `k` the surviving weight is
/// `D_k = sum_{done} b_i c_i + sum_{pending} c_i`; step `k` applies gate `g`
/// and succeeds with `(D_k - c_g + b_g c_g) / D_k`. The last entry is
/// `<A^dagger A> / D_M`, with the numerator supplied by the caller.
pub fn closed_form_step_probs(
    weights: &[f64],
    b_values: &[f64],
    order: &[usize],
    final_numerator: f64,
) -> Result<Vec<f64>> {
    if weights.len() != b_values.len() {
        return Err(Error::LengthMismatch {
            what: format!("{} weights, {} b values", weights.len(), b_values.len()),
        });
    }
    validate_order(order, weights.len()).map_err(|_| Error::LengthMismatch {
        what: format!("order {:?} for {} gates", order, weights.len()),
    })?;
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
        return Err(Error::NegativeWeight { index, value });
    }
    if let Some(&value) = b_values
        .iter()
        .find(|b| !(**b >= -PROB_SLACK && **b <= 1.0 + PROB_SLACK))
    {
        return Err(Error::BadProbability { value });
    }

    let mut surviving: f64 = weights.iter().sum();
    let mut probs = Vec::with_capacity(order.len() + 1);
    for &g in order {
        let next = surviving - weights[g] + b_values[g] * weights[g];
        probs.push(ratio(next, surviving));
        surviving = next;
    }
    probs.push(ratio(final_numerator, surviving));
    Ok(probs)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den <= 0.0 {
        0.0
    } else {
        num / den
    }
}

fn check_probabilities(probs: &[f64]) -> Result<()> {
    match probs
        .iter()
        .find(|p| !(**p >= 0.0 && **p <= 1.0 + PROB_SLACK))
    {
        Some(&value) => Err(Error::BadProbability { value }),
        None => Ok(()),
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    match times.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        Some(t) => Err(Error::BadParameters(format!("gate time {t} is not positive"))),
        None => Ok(()),
    }
}

/// Numerator of the subwave-projection mean time:
/// `t_{g_0} + p_0 t_{g_1} + p_0 p_1 t_{g_2} + ...`.
pub fn mean_time_numerator(probs: &[f64], times: &[f64], order: &[usize]) -> Result<f64> {
    if probs.len() != times.len() + 1 {
        return Err(Error::LengthMismatch {
            what: format!("{} probabilities for {} gates", probs.len(), times.len()),
        });
    }
    validate_order(order, times.len())?;
    check_probabilities(probs)?;
    check_times(times)?;
    let mut prefix = 1.0;
    let mut total = 0.0;
    for (k, &g) in order.iter().enumerate() {
        total += prefix * times[g];
        prefix *= probs[k];
    }
    Ok(total)
}

/// Expected total runtime with a restart after every failed subwave
/// projection. `probs[k]` belongs to step `k`, which runs gate `order[k]`.
/// Returns `f64::INFINITY` when some step never succeeds.
pub fn mean_time_swp(probs: &[f64], times: &[f64], order: &[usize]) -> Result<f64> {
    let numerator = mean_time_numerator(probs, times, order)?;
    let product: f64 = probs.iter().product();
    Ok(if product > 0.0 { numerator / product } else { f64::INFINITY })
}

/// Expected total runtime with a single projection at the end:
/// `sum_i t_i / P`.
pub fn mean_time_final(overall_prob: f64, times: &[f64]) -> Result<f64> {
    check_probabilities(&[overall_prob])?;
    check_times(times)?;
    let total: f64 = times.iter().sum();
    Ok(if overall_prob > 0.0 { total / overall_prob } else { f64::INFINITY })
}

/// Step probabilities and times together with both expected runtimes.
#[derive(Debug, Clone, Serialize)]
pub struct TimingModel {
    pub order: Vec<usize>,
    pub step_probs: Vec<f64>,
    pub gate_times: Vec<f64>,
    pub et_swp: f64,
    pub et_final: f64,
    /// Some step has zero probability; both runtimes are infinite.
    pub degenerate: bool,
}

impl TimingModel {
    pub fn evaluate(step_probs: Vec<f64>, gate_times: Vec<f64>, order: Vec<usize>) -> Result<Self> {
        let et_swp = mean_time_swp(&step_probs, &gate_times, &order)?;
        let overall: f64 = step_probs.iter().product();
        let et_final = mean_time_final(overall.min(1.0), &gate_times)?;
        Ok(TimingModel {
            degenerate: !et_swp.is_finite(),
            order,
            step_probs,
            gate_times,
            et_swp,
            et_final,
        })
    }

    /// `Et' / Et`.
    pub fn ratio(&self) -> f64 {
        if self.degenerate {
            f64::NAN
        } else {
            self.et_final / self.et_swp
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Exhaustive,
    Greedy,
}

/// Largest gate count searched exhaustively by default.
pub const EXHAUSTIVE_LIMIT: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct OrderSearchResult {
    pub best_order: Vec<usize>,
    pub best_et: f64,
    pub method: SearchMethod,
    pub evaluated: usize,
    /// Timing of the identity order, for comparison.
    pub baseline: TimingModel,
    pub best: TimingModel,
}

/// Inputs of the closed-form timing model, independent of any simulation.
#[derive(Debug, Clone)]
pub struct OrderProblem {
    pub weights: Vec<f64>,
    pub b_values: Vec<f64>,
    pub times: Vec<f64>,
    pub final_numerator: f64,
}

impl OrderProblem {
    pub fn from_program(program: &LcuProgram, psi: &StateVector) -> Self {
        OrderProblem {
            weights: program.coefficients().to_vec(),
            b_values: program.survival_probabilities(psi),
            times: program.times.clone(),
            final_numerator: program.success_probability(psi),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn timing(&self, order: &[usize]) -> Result<TimingModel> {
        let probs =
            closed_form_step_probs(&self.weights, &self.b_values, order, self.final_numerator)?;
        TimingModel::evaluate(probs, self.times.clone(), order.to_vec())
    }

    /// Gates sorted by descending `(1 - b_i) c_i / t_i`, ties in index order.
    ///
    /// The prefix product `p_0 ... p_{k-1}` equals the surviving weight
    /// `1 - sum_{j<k} (1 - b_j) c_j`, so the mean-time numerator is a
    /// weighted-completion-time objective and this ratio rule minimizes it.
    pub fn greedy_order(&self) -> Vec<usize> {
        let total: f64 = self.weights.iter().sum();
        let key = |g: usize| (1.0 - self.b_values[g]) * self.weights[g] / total / self.times[g];
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));
        order
    }

    pub fn search(&self, method: SearchMethod) -> Result<OrderSearchResult> {
        let identity: Vec<usize> = (0..self.len()).collect();
        let baseline = self.timing(&identity)?;
        let (best, evaluated) = match method {
            SearchMethod::Greedy => {
                let greedy = self.timing(&self.greedy_order())?;
                // never report something worse than the identity order
                let pick = if better(greedy.et_swp, baseline.et_swp) {
                    greedy
                } else {
                    baseline.clone()
                };
                (pick, 1)
            }
            SearchMethod::Exhaustive => {
                let orders: Vec<Vec<usize>> = (0..self.len()).permutations(self.len()).collect();
                let timings: Vec<TimingModel> = orders
                    .par_iter()
                    .map(|o| self.timing(o))
                    .collect::<Result<_>>()?;
                let count = timings.len();
                let mut best = timings[0].clone();
                for t in timings.into_iter().skip(1) {
                    if better(t.et_swp, best.et_swp) {
                        best = t;
                    }
                }
                (best, count)
            }
        };
        Ok(OrderSearchResult {
            best_order: best.order.clone(),
            best_et: best.et_swp,
            method,
            evaluated,
            baseline,
            best,
        })
    }
}

/// Strict improvement beyond roundoff.
fn better(candidate: f64, incumbent: f64) -> bool {
    if !incumbent.is_finite() {
        return candidate.is_finite();
    }
    candidate < incumbent - 1e-12 * incumbent.abs().max(1.0)
}

/// Exhaustive search for up to [`EXHAUSTIVE_LIMIT`] gates, greedy beyond.
pub fn order_search(program: &LcuProgram, psi: &StateVector) -> Result<OrderSearchResult> {
    let method = if program.len() <= EXHAUSTIVE_LIMIT {
        SearchMethod::Exhaustive
    } else {
        SearchMethod::Greedy
    };
    order_search_with(program, psi, method)
}

pub fn order_search_with(
    program: &LcuProgram,
    psi: &StateVector,
    method: SearchMethod,
) -> Result<OrderSearchResult> {
    OrderProblem::from_program(program, psi).search(method)
}

/// One row of the uniform-model comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub p: f64,
    #[serde(rename = "Et")]
    pub et: f64,
    #[serde(rename = "Et_prime")]
    pub et_prime: f64,
    pub ratio: f64,
}

/// Uniform model: unit gate times and every one of the `M + 1` steps
/// succeeding with probability `p`. Then
/// `Et = (1 - p^M) / (p^{M+1} (1 - p))` and `Et' = M / p^{M+1}`.
pub fn speedup_sweep(p: f64, gate_counts: &[usize]) -> Result<Vec<SweepRow>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadProbability { value: p });
    }
    if gate_counts.is_empty() {
        return Err(Error::BadParameters("empty range of M".into()));
    }
    gate_counts
        .iter()
        .map(|&m| {
            if m == 0 {
                return Err(Error::BadParameters("M must be at least 1".into()));
            }
            let pm = p.powi(m as i32);
            let denom = pm * p;
            let et = (1.0 - pm) / (denom * (1.0 - p));
            let et_prime = m as f64 / denom;
            Ok(SweepRow {
                m,
                p,
                et,
                et_prime,
                ratio: et_prime / et,
            })
        })
        .collect()
}

/// `M (1 - p) / (1 - p^M)`, the uniform-model ratio `Et' / Et`.
pub fn uniform_ratio(p: f64, m: usize) -> f64 {
    m as f64 * (1.0 - p) / (1.0 - p.powi(m as i32))
}
