//! Command-line front end for the `dqc` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{
    mean_time_swp, order_search_with, speedup_sweep, SearchMethod, TimingModel, EXHAUSTIVE_LIMIT,
};
use crate::error::{Error, Result};
use crate::files::{load_matrix, ProblemFile, ProgramFile};
use crate::gtc::{doubled_space_qubits, prepare_ground_state_with};
use crate::json::{matrix_to_value, vector_to_value};
use crate::lcu::decompose_contraction_with_tol;
use crate::linalg::{
    canonical_phase, frobenius, operator_norm, phase_distance, unitarity_residual, ComplexMatrix,
    StateVector, DEFAULT_TOLERANCE,
};
use crate::simulator::{run_final_projection, run_swp_exact, run_swp_montecarlo, LcuProgram, RunTrace};

pub const TOLERANCE_ENV: &str = "DQC_TOLERANCE";

const REPORT_HELP: &str = "\
CSV columns:
  decompose     factor,row,col,re,im
  run           step,gate,closed_form_p,simulated_p,cumulative_product,restarts,elapsed_time
  montecarlo    step,gate,closed_form_p,simulated_p,cumulative_product,restarts,elapsed_time
                (simulated_p is the empirical frequency; restarts and elapsed_time are means)
  order-search  order,p_0..p_M,Et,Et_prime,ratio  (identity order first, then the best order)
  ground-state  same columns as run
  sweep         M,p,Et,Et_prime,ratio

Environment:
  DQC_TOLERANCE  default tolerance for structural checks (overridden by --tolerance)

Exit codes: 0 ok, 1 domain error, 2 usage error.";

#[derive(Debug, Parser)]
#[command(
    name = "dqc",
    version,
    about = "Duality quantum computing with subwave projections",
    after_help = REPORT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,

    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,

    /// Tolerance for Hermitian/unitary/contraction checks.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Split a contraction into the average of two unitaries.
    Decompose {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Run a program with subwave projections.
    Run {
        #[arg(long)]
        program: PathBuf,
        /// Gate order, e.g. "2,0,1".
        #[arg(long)]
        order: Option<String>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Seeded restart-process simulation of a program.
    Montecarlo {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        order: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Find the gate order with the smallest expected runtime.
    OrderSearch {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, conflicts_with = "greedy")]
        exhaustive: bool,
        #[arg(long)]
        greedy: bool,
    },
    /// Chebyshev-filtered ground-state preparation.
    GroundState {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Uniform-model expected runtimes for M = 1, 2, 4, ... up to --m-max.
    Sweep {
        #[arg(long)]
        p: f64,
        #[arg(long = "m-max")]
        m_max: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Decompose,
    Run,
    Montecarlo,
    OrderSearch,
    GroundState,
    Sweep,
}

/// Validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    /// Matrix, program or problem file; `None` for `sweep`.
    pub input_path: Option<PathBuf>,
    pub mode: Mode,
    pub seed: u64,
    pub trials: usize,
    pub tolerance: f64,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub order: Option<Vec<usize>>,
    /// `None` picks exhaustive up to eight gates and greedy beyond.
    pub search: Option<SearchMethod>,
    pub sweep_p: f64,
    pub sweep_m_max: usize,
}

fn usage_error(msg: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(ErrorKind::ValueValidation, msg)
}

fn parse_order(text: &str) -> std::result::Result<Vec<usize>, clap::Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| usage_error(format!("invalid --order entry '{s}'")))
        })
        .collect()
}

/// Parses `argv` (including the program name). Usage problems come back as
/// a `clap::Error`, whose `exit()` uses status 2.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let tolerance = match cli.tolerance {
        Some(t) => t,
        None => match std::env::var(TOLERANCE_ENV) {
            Ok(v) => v
                .trim()
                .parse::<f64>()
                .map_err(|_| usage_error(format!("{TOLERANCE_ENV}={v} is not a number")))?,
            Err(_) => DEFAULT_TOLERANCE,
        },
    };
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(usage_error(format!("tolerance must be positive, got {tolerance}")));
    }
    let mut config = RunConfig {
        command: CommandKind::Sweep,
        input_path: None,
        mode: Mode::Exact,
        seed: 0,
        trials: 1,
        tolerance,
        output_path: cli.output,
        format: cli.format,
        order: None,
        search: None,
        sweep_p: 0.0,
        sweep_m_max: 0,
    };
    match cli.command {
        Cmd::Decompose { matrix } => {
            config.command = CommandKind::Decompose;
            config.input_path = Some(matrix);
        }
        Cmd::Run {
            program,
            order,
            mode,
            seed,
            trials,
        } => {
            config.command = CommandKind::Run;
            config.input_path = Some(program);
            config.order = order.as_deref().map(parse_order).transpose()?;
            config.mode = mode;
            config.seed = seed;
            config.trials = trials;
        }
        Cmd::Montecarlo {
            program,
            order,
            seed,
            trials,
        } => {
            config.command = CommandKind::Montecarlo;
            config.input_path = Some(program);
            config.order = order.as_deref().map(parse_order).transpose()?;
            config.mode = Mode::Mc;
            config.seed = seed;
            config.trials = trials;
        }
        Cmd::OrderSearch {
            program,
            exhaustive,
            greedy,
        } => {
            config.command = CommandKind::OrderSearch;
            config.input_path = Some(program);
            config.search = if exhaustive {
                Some(SearchMethod::Exhaustive)
            } else if greedy {
                Some(SearchMethod::Greedy)
            } else {
                None
            };
        }
        Cmd::GroundState { problem } => {
            config.command = CommandKind::GroundState;
            config.input_path = Some(problem);
        }
        Cmd::Sweep { p, m_max } => {
            config.command = CommandKind::Sweep;
            config.sweep_p = p;
            config.sweep_m_max = m_max;
        }
    }
    if config.mode == Mode::Mc && config.trials == 0 {
        return Err(usage_error("--trials must be at least 1"));
    }
    Ok(config)
}

/// Runs the command and writes the report. Returns the process exit code.
pub fn execute(config: &RunConfig) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    execute_to(config, &mut stdout.lock(), &mut stderr.lock())
}

pub fn execute_to(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = render(config).and_then(|report| match &config.output_path {
        Some(path) => std::fs::write(path, report)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => out.write_all(report.as_bytes()).map_err(Error::from),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            1
        }
    }
}

/// Produces the report text for a configuration.
pub fn render(config: &RunConfig) -> Result<String> {
    let input = || {
        config
            .input_path
            .as_deref()
            .ok_or_else(|| Error::BadParameters("missing input file".into()))
    };
    match config.command {
        CommandKind::Decompose => report_decompose(&load_matrix(input()?)?, config),
        CommandKind::Run | CommandKind::Montecarlo => {
            let (program, psi) = load_program(input()?, config)?;
            if config.mode == Mode::Mc {
                report_montecarlo(&program, &psi, config)
            } else {
                report_run(&program, &psi, config)
            }
        }
        CommandKind::OrderSearch => {
            let (program, psi) = load_program(input()?, config)?;
            report_order_search(&program, &psi, config)
        }
        CommandKind::GroundState => report_ground_state(&ProblemFile::load(input()?)?, config),
        CommandKind::Sweep => report_sweep(config),
    }
}

fn load_program(path: &std::path::Path, config: &RunConfig) -> Result<(LcuProgram, StateVector)> {
    let (program, psi) = ProgramFile::load(path)?.build(config.tolerance)?;
    match &config.order {
        Some(order) => Ok((program.with_order(order.clone())?, psi)),
        None => Ok((program, psi)),
    }
}

/// Rows of strings rendered either as an aligned table or as CSV.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    fn text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
            out.push('\n');
        }
        out
    }
}

/// Full-precision number for CSV.
fn raw(v: f64) -> String {
    format!("{v}")
}

/// Rounded number for tables.
fn short(v: f64) -> String {
    if !v.is_finite() {
        format!("{v}")
    } else if v == 0.0 || (1e-4..1e6).contains(&v.abs()) {
        format!("{v:.6}")
    } else {
        format!("{v:.3e}")
    }
}

fn complex_text(re: f64, im: f64) -> String {
    let sign = if im < 0.0 { '-' } else { '+' };
    format!("{}{}{}i", short(re), sign, short(im.abs()))
}

fn matrix_text(a: &ComplexMatrix) -> String {
    let mut t = Table::new(&[]);
    t.header = (0..a.ncols()).map(|j| format!("[{j}]")).collect();
    for i in 0..a.nrows() {
        t.push((0..a.ncols()).map(|j| complex_text(a[(i, j)].re, a[(i, j)].im)).collect());
    }
    t.text()
}

fn vector_text(v: &StateVector) -> String {
    v.iter()
        .map(|z| complex_text(z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}

fn json_text(value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn report_decompose(a: &ComplexMatrix, config: &RunConfig) -> Result<String> {
    let d = decompose_contraction_with_tol(a, config.tolerance)?;
    let norm = operator_norm(a)?;
    let residual = frobenius(&(a - d.average()));
    let (r0, r1) = (unitarity_residual(&d.u0), unitarity_residual(&d.u1));
    match config.format {
        Format::Json => json_text(&json!({
            "operator_norm": norm,
            "residual": residual,
            "u0_unitarity": r0,
            "u1_unitarity": r1,
            "u0": matrix_to_value(&d.u0),
            "u1": matrix_to_value(&d.u1),
        })),
        Format::Csv => {
            let mut t = Table::new(&["factor", "row", "col", "re", "im"]);
            for (name, u) in [("u0", &d.u0), ("u1", &d.u1)] {
                for i in 0..u.nrows() {
                    for j in 0..u.ncols() {
                        t.push(vec![
                            name.into(),
                            i.to_string(),
                            j.to_string(),
                            raw(u[(i, j)].re),
                            raw(u[(i, j)].im),
                        ]);
                    }
                }
            }
            t.csv()
        }
        Format::Table => Ok(format!(
            "operator norm            {}\n||A - (U0 + U1)/2||      {}\n||U0^dagger U0 - I||     {}\n||U1^dagger U1 - I||     {}\n\nU0\n{}\nU1\n{}",
            short(norm),
            short(residual),
            short(r0),
            short(r1),
            matrix_text(&d.u0),
            matrix_text(&d.u1)
        )),
    }
}

const TRACE_COLUMNS: [&str; 7] = [
    "step",
    "gate",
    "closed_form_p",
    "simulated_p",
    "cumulative_product",
    "restarts",
    "elapsed_time",
];

fn trace_table(trace: &RunTrace, times: &[f64], fmt: fn(f64) -> String) -> Table {
    let mut t = Table::new(&TRACE_COLUMNS);
    let cumulative = trace.cumulative_probabilities();
    let mut elapsed = 0.0;
    for (k, p) in trace.step_probabilities.iter().enumerate() {
        let gate = match trace.gate_order.get(k) {
            Some(&g) => {
                elapsed += times[g];
                g.to_string()
            }
            None => "final".to_string(),
        };
        t.push(vec![
            k.to_string(),
            gate,
            fmt(trace.closed_form_probabilities[k]),
            fmt(*p),
            fmt(cumulative[k]),
            trace.restarts.to_string(),
            fmt(elapsed),
        ]);
    }
    t
}

fn report_run(program: &LcuProgram, psi: &StateVector, config: &RunConfig) -> Result<String> {
    let trace = run_swp_exact(program, psi)?.into_success()?;
    let final_run = run_final_projection(program, psi)?.into_success()?;
    let state = canonical_phase(trace.final_state.as_ref().expect("successful trace has a state"));
    let other = final_run.final_state.as_ref().expect("successful trace has a state");
    let distance = phase_distance(&state, other);
    let timing = TimingModel::evaluate(
        trace.step_probabilities.clone(),
        program.times.clone(),
        program.order.clone(),
    )?;
    match config.format {
        Format::Json => json_text(&json!({
            "trace": trace,
            "final_state": vector_to_value(&state),
            "final_projection": {
                "overall_probability": final_run.overall_probability,
                "state_distance": distance,
            },
            "timing": timing,
        })),
        Format::Csv => trace_table(&trace, &program.times, raw).csv(),
        Format::Table => Ok(format!(
            "{}\noverall probability      {}\n<A^dagger A>             {}\nfinal-projection P'      {}\nrunner state distance    {}\nEt (subwave projection)  {}\nEt' (final projection)   {}\nfinal state              {}\n",
            trace_table(&trace, &program.times, short).text(),
            short(trace.overall_probability),
            short(program.success_probability(psi)),
            short(final_run.overall_probability),
            short(distance),
            short(timing.et_swp),
            short(timing.et_final),
            vector_text(&state),
        )),
    }
}

fn report_montecarlo(
    program: &LcuProgram,
    psi: &StateVector,
    config: &RunConfig,
) -> Result<String> {
    let summary = run_swp_montecarlo(program, psi, config.seed, config.trials)?;
    let et = mean_time_swp(&summary.exact_step_probabilities, &program.times, &program.order)?;
    let fmt: fn(f64) -> String = if config.format == Format::Table { short } else { raw };
    let mut t = Table::new(&TRACE_COLUMNS);
    let mut cumulative = 1.0;
    for (k, p) in summary.exact_step_probabilities.iter().enumerate() {
        cumulative *= p;
        let gate = summary
            .gate_order
            .get(k)
            .map_or_else(|| "final".to_string(), |g| g.to_string());
        t.push(vec![
            k.to_string(),
            gate,
            fmt(*p),
            fmt(summary.empirical_step_probabilities[k]),
            fmt(cumulative),
            fmt(summary.mean_restarts),
            fmt(summary.mean_elapsed_time),
        ]);
    }
    match config.format {
        Format::Json => json_text(&json!({
            "summary": summary,
            "closed_form_et": et,
        })),
        Format::Csv => t.csv(),
        Format::Table => Ok(format!(
            "{}\ntrials                   {}\nseed                     {}\nmean attempts            {} +- {}\nmean elapsed time        {} +- {}\nEt (closed form)         {}\n",
            t.text(),
            summary.trials,
            summary.seed,
            short(summary.mean_attempts),
            short(summary.attempts_std_error),
            short(summary.mean_elapsed_time),
            short(summary.elapsed_std_error),
            short(et),
        )),
    }
}

fn order_label(order: &[usize]) -> String {
    order.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn report_order_search(
    program: &LcuProgram,
    psi: &StateVector,
    config: &RunConfig,
) -> Result<String> {
    let method = config.search.unwrap_or(if program.len() <= EXHAUSTIVE_LIMIT {
        SearchMethod::Exhaustive
    } else {
        SearchMethod::Greedy
    });
    let result = order_search_with(program, psi, method)?;
    let fmt: fn(f64) -> String = if config.format == Format::Table { short } else { raw };
    let mut header = vec!["order".to_string()];
    header.extend((0..=program.len()).map(|k| format!("p_{k}")));
    header.extend(["Et", "Et_prime", "ratio"].map(String::from));
    let mut t = Table {
        header,
        rows: vec![],
    };
    for timing in [&result.baseline, &result.best] {
        let mut row = vec![order_label(&timing.order)];
        row.extend(timing.step_probs.iter().map(|p| fmt(*p)));
        row.extend([fmt(timing.et_swp), fmt(timing.et_final), fmt(timing.ratio())]);
        t.push(row);
    }
    match config.format {
        Format::Json => json_text(&serde_json::to_value(&result)?),
        Format::Csv => t.csv(),
        Format::Table => Ok(format!(
            "{}\nmethod                   {}\norders evaluated         {}\nbest order               {}\nbest Et                  {}\n",
            t.text(),
            match result.method {
                SearchMethod::Exhaustive => "exhaustive",
                SearchMethod::Greedy => "greedy",
            },
            result.evaluated,
            order_label(&result.best_order),
            short(result.best_et),
        )),
    }
}

fn report_ground_state(file: &ProblemFile, config: &RunConfig) -> Result<String> {
    let (problem, options) = file.build(config.tolerance)?;
    let r = prepare_ground_state_with(&problem, options)?;
    let layout = r.plan.program.layout;
    let state = canonical_phase(&r.state);
    match config.format {
        Format::Json => json_text(&json!({
            "plan": {
                "M0": r.plan.counts.power,
                "m0": r.plan.m0,
                "M": r.plan.counts.terms,
                "alphas": r.plan.weights.alphas,
                "alpha_sum": r.plan.weights.alpha_sum,
                "layout": layout,
                "qubits": layout.qubits(),
                "doubled_space_qubits": doubled_space_qubits(layout.n, r.plan.counts.terms),
            },
            "lambda0": problem.lambda0,
            "gap": problem.gap,
            "phi0": problem.phi0,
            "fidelity": r.fidelity,
            "distance": r.distance,
            "state": vector_to_value(&state),
            "trace": r.trace,
            "timing": r.timing,
        })),
        Format::Csv => trace_table(&r.trace, &r.plan.program.times, raw).csv(),
        Format::Table => {
            let alphas = r
                .plan
                .weights
                .alphas
                .iter()
                .map(|a| short(*a))
                .collect::<Vec<_>>()
                .join(", ");
            Ok(format!(
                "lambda0                  {}\ngap                      {}\nphi0                     {}\nM0                       {}\nM                        {}\nalpha_i                  {}\nalpha                    {}\nqubits (m + 1 + n)       {} (doubled-space construction: {})\n\n{}\nsuccess probability      {}\nfidelity                 {}\ndistance to ground state {}\nEt (subwave projection)  {}\nEt' (final projection)   {}\nstate                    {}\n",
                short(problem.lambda0),
                short(problem.gap),
                short(problem.phi0),
                r.plan.counts.power,
                r.plan.counts.terms,
                alphas,
                short(r.plan.weights.alpha_sum),
                layout.qubits(),
                doubled_space_qubits(layout.n, r.plan.counts.terms),
                trace_table(&r.trace, &r.plan.program.times, short).text(),
                short(r.trace.overall_probability),
                short(r.fidelity),
                short(r.distance),
                short(r.timing.et_swp),
                short(r.timing.et_final),
                vector_text(&state),
            ))
        }
    }
}

fn report_sweep(config: &RunConfig) -> Result<String> {
    if config.sweep_m_max == 0 {
        return Err(Error::BadParameters("--m-max must be at least 1".into()));
    }
    let counts: Vec<usize> = std::iter::successors(Some(1usize), |m| m.checked_mul(2))
        .take_while(|&m| m <= config.sweep_m_max)
        .collect();
    let rows = speedup_sweep(config.sweep_p, &counts)?;
    let fmt: fn(f64) -> String = if config.format == Format::Table { short } else { raw };
    let mut t = Table::new(&["M", "p", "Et", "Et_prime", "ratio"]);
    for r in &rows {
        t.push(vec![r.m.to_string(), fmt(r.p), fmt(r.et), fmt(r.et_prime), fmt(r.ratio)]);
    }
    match config.format {
        Format::Json => json_text(&serde_json::to_value(&rows)?),
        Format::Csv => t.csv(),
        Format::Table => Ok(t.text()),
    }
}
