//! `polysparse` command-line interface.
//!
//! Exit codes: 0 on success (for `solve`, a verified estimate), 2 when `solve`
//! returns an estimate that fails the residual check or an infeasibility
//! certificate, 1 on any error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use polysparse::analysis;
use polysparse::bp::{self, BpConfig};
use polysparse::conic::write_trace_csv;
use polysparse::experiment::{self, ExperimentSpec, Method, PhaseGrid, Preset};
use polysparse::extract;
use polysparse::greedy::{self, GreedyConfig};
use polysparse::{MonomialBasis, PolynomialSystem, SolverOptions};

#[derive(Parser)]
#[command(name = "polysparse", version, about = "Sparse solutions of polynomial systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a system given as JSON and print the estimate as JSON.
    Solve(SolveArgs),
    /// Evaluate coherence-based recovery conditions for a system.
    Certify(CertifyArgs),
    /// Run a Monte Carlo experiment and write the summary CSV.
    Bench(BenchArgs),
    /// Sweep sparsity and equation ratio and write the phase-diagram CSV.
    Phase(PhaseArgs),
    /// List the monomial basis, or lift a point.
    Lift(LiftArgs),
}

#[derive(Args)]
struct NonnegFlags {
    /// Force nonnegativity on even-degree monomials.
    #[arg(long, overrides_with = "no_nonneg")]
    nonneg: bool,
    /// Disable nonnegativity on even-degree monomials.
    #[arg(long = "no-nonneg")]
    no_nonneg: bool,
}

impl NonnegFlags {
    fn value(&self) -> Option<bool> {
        match (self.nonneg, self.no_nonneg) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// System file (JSON).
    input: PathBuf,
    #[arg(long, default_value = "irl1l2")]
    method: Method,
    /// Noise radius for the convex methods (`||A phi + b - y||_2 <= eps`);
    /// for `aga`/`ega` it thresholds the squared residual.
    #[arg(long, visible_alias = "noise-epsilon", default_value_t = 0.0)]
    epsilon: f64,
    #[command(flatten)]
    nonneg: NonnegFlags,
    /// Relative tolerance of the polynomial residual check.
    #[arg(long, default_value_t = bp::VERIFY_RTOL)]
    tol: f64,
    /// Primal/dual tolerance of the conic solver.
    #[arg(long)]
    solver_tol: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Reweighting rounds for `irl1l2` and `rl1`.
    #[arg(long, default_value_t = 10)]
    reweight_iterations: usize,
    /// For `ega`: finish the first successful cardinality and list all solutions.
    #[arg(long)]
    enumerate_all: bool,
    /// Write the conic solver trace of the last solve as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    input: PathBuf,
    /// Sparsity level to certify.
    #[arg(long)]
    k: usize,
    /// Noise level for the stability bounds.
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Use reduced counts when some columns of A are zero.
    #[arg(long)]
    allow_truncation: bool,
    /// Human-readable output instead of JSON.
    #[arg(long)]
    pretty: bool,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Number of equations.
    #[arg(long = "neq", default_value_t = 25)]
    n_eq: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Comma-separated methods [default: irl1l2,sl1l2,aga,ega, or the preset's list].
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Norm of the noise added to the data.
    #[arg(long, default_value_t = 0.0)]
    noise_epsilon: f64,
    /// Radius handed to the methods (defaults to the noise norm).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    pure_nonlinear: bool,
    #[arg(long)]
    phase_retrieval: bool,
    #[command(flatten)]
    nonneg: NonnegFlags,
    /// Success threshold on `||x_hat - x0||_2`.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl ExperimentArgs {
    fn spec(&self, id: &str) -> ExperimentSpec {
        ExperimentSpec {
            experiment_id: id.into(),
            n: self.n,
            d: self.d,
            n_eq: self.n_eq,
            k: self.k,
            trials: self.trials,
            seed: self.seed,
            noise_epsilon: self.noise_epsilon,
            method_epsilon: self.epsilon,
            pure_nonlinear: self.pure_nonlinear,
            phase_retrieval: self.phase_retrieval,
            methods: self
                .methods
                .clone()
                .unwrap_or_else(|| vec![Method::Irl1l2, Method::Sl1l2, Method::Aga, Method::Ega]),
            success_tol: self.tol,
            nonneg: self.nonneg.value(),
            timing: false,
            solver: SolverOptions::default(),
        }
    }

    /// Apply command-line overrides to a preset experiment.
    fn override_preset(&self, spec: &mut ExperimentSpec) {
        if let Some(m) = &self.methods {
            spec.methods = m.clone();
        }
        if let Some(v) = self.nonneg.value() {
            spec.nonneg = Some(v);
        }
        spec.success_tol = self.tol;
    }
}

#[derive(Args)]
struct BenchArgs {
    /// One of table1..table6, pure-d4, fig5, fig6.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Record mean wall time per solve (output then depends on the machine).
    #[arg(long)]
    timing: bool,
    /// Also write per-trial records as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseArgs {
    /// fig1 or fig2.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Ratios `N / n` (each >= 1).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5")]
    deltas: Vec<f64>,
    /// Sparsity levels `0..=kmax`.
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    /// Per-cell time budget in seconds; exceeded cells are reported as timed out.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct LiftArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Comma-separated point to lift.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_system(path: &Path) -> Result<PolynomialSystem> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    PolynomialSystem::from_json_str(&text).with_context(|| format!("invalid system file {}", path.display()))
}

fn solver_options(args: &SolveArgs) -> SolverOptions {
    let mut o = SolverOptions {
        trace: args.trace.is_some(),
        ..SolverOptions::default()
    };
    if let Some(t) = args.solver_tol {
        o.primal_tol = t;
        o.dual_tol = t;
    }
    if let Some(m) = args.max_iterations {
        o.max_iterations = m;
    }
    o
}

fn cmd_solve(args: &SolveArgs) -> Result<ExitCode> {
    if !(args.epsilon >= 0.0) {
        bail!("--epsilon must be nonnegative");
    }
    if !(args.tol > 0.0) {
        bail!("--tol must be positive");
    }
    let system = load_system(&args.input)?;
    let y_norm = system.y().norm();
    let (report, verified) = if let Some(bm) = args.method.bp_method() {
        let cfg = BpConfig {
            method: bm,
            nonneg: args.nonneg.value().unwrap_or(args.method.is_group()),
            noise_epsilon: args.epsilon,
            reweight_iterations: args.reweight_iterations,
            solver: solver_options(args),
            ..BpConfig::default()
        };
        let res = bp::solve(&system, &cfg)?;
        if let Some(path) = &args.trace {
            let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_trace_csv(&res.trace, BufWriter::new(f))?;
        }
        let verified = res.residual_norm <= args.tol * (1.0 + y_norm) + args.epsilon;
        let report = json!({
            "method": args.method.name(),
            "x_hat": res.x_hat.as_slice(),
            "support": res.group_support,
            "verified": verified,
            "residual_norm": res.residual_norm,
            "extraction": res.extraction.method_used,
            "sign_consistent": res.extraction.sign_consistent,
            "assumption1": res.assumption1,
            "diagnostics": {
                "outer_iterations": res.outer_iterations,
                "non_terminating": res.non_terminating,
                "converged": res.solver_status.converged,
                "solver_iterations": res.solver_status.iterations,
                "primal_residual": res.solver_status.primal_residual,
                "dual_residual": res.solver_status.dual_residual,
                "objective": res.solver_status.objective,
                "polished": res.solver_status.polished,
                "support_history": res.support_history,
            },
        });
        (report, verified)
    } else {
        let cfg = GreedyConfig {
            epsilon: args.epsilon,
            max_support: None,
            enumerate_all: args.enumerate_all,
        };
        let res = match args.method {
            Method::Aga => greedy::aga(&system, &cfg)?,
            _ => greedy::ega(&system, &cfg)?,
        };
        let (ok, residual_norm) = extract::verify(&system, res.x_hat.as_slice(), args.tol);
        let verified = !res.infeasible && (ok || residual_norm <= args.tol * (1.0 + y_norm) + args.epsilon.sqrt());
        if res.infeasible {
            eprintln!(
                "no support of size <= n reaches squared residual {}: the system has no solution within this tolerance",
                args.epsilon
            );
        }
        let report = json!({
            "method": args.method.name(),
            "x_hat": res.x_hat.as_slice(),
            "support": res.support,
            "verified": verified,
            "residual_norm": residual_norm,
            "infeasible": res.infeasible,
            "all_solutions": res.all_solutions,
            "diagnostics": {
                "ls_solves": res.ls_solves,
                "residual_sq": res.residual_sq,
            },
        });
        (report, verified)
    };
    let mut out = open_output(args.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(if verified { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_certify(args: &CertifyArgs) -> Result<ExitCode> {
    let system = load_system(&args.input)?;
    let cert = analysis::certify(&system, args.k, args.epsilon, args.allow_truncation)?;
    let mut out = open_output(args.output.as_deref())?;
    if args.pretty {
        writeln!(out, "{cert}")?;
    } else {
        serde_json::to_writer_pretty(&mut out, &cert)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(args: &BenchArgs) -> Result<ExitCode> {
    let mut specs = match &args.preset {
        Some(name) => match experiment::preset(name, args.exp.trials, args.exp.seed) {
            Some(Preset::Summary(specs)) => specs,
            Some(Preset::Phase(..)) => bail!("preset '{name}' is a phase diagram; use the phase subcommand"),
            None => bail!("unknown preset '{name}' (known: {})", experiment::PRESET_NAMES.join(", ")),
        },
        None => vec![args.exp.spec("custom")],
    };
    for s in &mut specs {
        if args.preset.is_some() {
            args.exp.override_preset(s);
        }
        s.timing = args.timing;
        s.validate()?;
    }
    let mut out = open_output(args.output.as_deref())?;
    let mut records_out = match &args.records {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => None,
    };
    for (i, spec) in specs.iter().enumerate() {
        eprintln!(
            "[{}/{}] {}: n={} d={} N={} k={} trials={}",
            i + 1,
            specs.len(),
            spec.experiment_id,
            spec.n,
            spec.d,
            spec.n_eq,
            spec.k,
            spec.trials
        );
        let records = experiment::run_trials(spec, args.exp.threads)?;
        let rows = experiment::summarize(spec, &records);
        experiment::write_summary_csv(&rows, &mut out, i == 0)?;
        out.flush()?;
        if let Some(w) = records_out.as_mut() {
            for r in &records {
                serde_json::to_writer(&mut *w, &json!({"experiment_id": spec.experiment_id, "record": r}))?;
                writeln!(w)?;
            }
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_phase(args: &PhaseArgs) -> Result<ExitCode> {
    let (mut spec, mut grid) = match &args.preset {
        Some(name) => match experiment::preset(name, args.exp.trials, args.exp.seed) {
            Some(Preset::Phase(spec, grid)) => (spec, grid),
            Some(Preset::Summary(_)) => bail!("preset '{name}' is a summary experiment; use the bench subcommand"),
            None => bail!("unknown preset '{name}' (known: {})", experiment::PRESET_NAMES.join(", ")),
        },
        None => (
            args.exp.spec("phase"),
            PhaseGrid {
                ks: (0..=args.kmax).collect(),
                deltas: args.deltas.clone(),
                time_budget: None,
            },
        ),
    };
    if args.preset.is_some() {
        args.exp.override_preset(&mut spec);
    }
    if let Some(t) = args.time_budget {
        if !(t > 0.0) {
            bail!("--time-budget must be positive");
        }
        grid.time_budget = Some(Duration::from_secs_f64(t));
    }
    if grid.ks.iter().any(|&k| k > spec.n) {
        grid.ks.retain(|&k| k <= spec.n);
        eprintln!("sparsity levels above n = {} dropped", spec.n);
    }
    eprintln!(
        "phase diagram n={} d={} deltas={:?} k=0..={} trials={}",
        spec.n,
        spec.d,
        grid.deltas,
        grid.ks.last().copied().unwrap_or(0),
        spec.trials
    );
    let cells = experiment::phase_diagram(&spec, &grid, args.exp.threads)?;
    let mut out = open_output(args.output.as_deref())?;
    experiment::write_phase_csv(&cells, &mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_lift(args: &LiftArgs) -> Result<ExitCode> {
    let basis = MonomialBasis::new(args.n, args.d)?;
    let lifted = match &args.x {
        Some(x) => Some(basis.lift(x)?),
        None => None,
    };
    let monomials: Vec<_> = basis
        .indexes()
        .iter()
        .enumerate()
        .map(|(k, alpha)| {
            let mut entry = json!({
                "index": k,
                "alpha": alpha.exponents(),
                "monomial": alpha.to_string(),
            });
            if let Some(phi) = &lifted {
                entry["value"] = json!(phi[k]);
            }
            entry
        })
        .collect();
    let report = json!({
        "n": args.n,
        "d": args.d,
        "M": basis.len(),
        "m": polysparse::poly::group_size(args.n, args.d)?,
        "monomials": monomials,
    });
    let mut out = open_output(None)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POLYSPARSE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Phase(a) => cmd_phase(a),
        Command::Lift(a) => cmd_lift(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
