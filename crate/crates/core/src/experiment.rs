//! Monte Carlo experiments: random instances, per-method trials, summaries
//! and phase diagrams.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bp::{self, BpConfig, BpMethod};
use crate::conic::SolverOptions;
use crate::greedy::{self, GreedyConfig};
use crate::poly::{MonomialBasis, PolyError, PolynomialSystem};
use crate::rng::GaussianStream;

/// Entries with `|x_j|` below this count as zero for support recovery.
pub const SUPPORT_ZERO_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    L1,
    Rl1,
    L1l2,
    Irl1l2,
    Sl1l2,
    Aga,
    Ega,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::L1,
        Method::Rl1,
        Method::L1l2,
        Method::Irl1l2,
        Method::Sl1l2,
        Method::Aga,
        Method::Ega,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::L1 => "l1",
            Method::Rl1 => "rl1",
            Method::L1l2 => "l1l2",
            Method::Irl1l2 => "irl1l2",
            Method::Sl1l2 => "sl1l2",
            Method::Aga => "aga",
            Method::Ega => "ega",
        }
    }

    pub fn bp_method(self) -> Option<BpMethod> {
        match self {
            Method::L1 => Some(BpMethod::L1),
            Method::Rl1 => Some(BpMethod::ReweightedL1),
            Method::L1l2 => Some(BpMethod::GroupL1L2),
            Method::Irl1l2 => Some(BpMethod::IRGroupL1L2),
            Method::Sl1l2 => Some(BpMethod::SelGroupL1L2),
            Method::Aga | Method::Ega => None,
        }
    }

    /// Group formulations carry nonnegativity on even monomials by default.
    pub fn is_group(self) -> bool {
        matches!(self, Method::L1l2 | Method::Irl1l2 | Method::Sl1l2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown method '{s}' (expected one of l1, rl1, l1l2, irl1l2, sl1l2, aga, ega)"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub experiment_id: String,
    pub n: usize,
    pub d: usize,
    /// Number of equations.
    #[serde(rename = "N")]
    pub n_eq: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    /// Norm of the injected noise vector.
    pub noise_epsilon: f64,
    /// Radius given to the methods; defaults to `noise_epsilon`.
    pub method_epsilon: Option<f64>,
    pub pure_nonlinear: bool,
    pub phase_retrieval: bool,
    pub methods: Vec<Method>,
    pub success_tol: f64,
    /// Override of the default nonnegativity choice per method.
    pub nonneg: Option<bool>,
    /// Record wall-clock time per solve (makes CSV output machine dependent).
    pub timing: bool,
    #[serde(skip)]
    pub solver: SolverOptions,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            experiment_id: "custom".into(),
            n: 20,
            d: 2,
            n_eq: 25,
            k: 3,
            trials: 100,
            seed: 0,
            noise_epsilon: 0.0,
            method_epsilon: None,
            pure_nonlinear: false,
            phase_retrieval: false,
            methods: vec![Method::Irl1l2, Method::Sl1l2, Method::Aga, Method::Ega],
            success_tol: 1e-6,
            nonneg: None,
            timing: false,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidSpec(m));
        if self.n == 0 || self.d == 0 || self.n_eq == 0 {
            return bad("n, d and N must be positive".into());
        }
        if self.k > self.n {
            return bad(format!("k = {} exceeds n = {}", self.k, self.n));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.noise_epsilon >= 0.0) || !self.noise_epsilon.is_finite() {
            return bad(format!("noise_epsilon = {}", self.noise_epsilon));
        }
        if let Some(e) = self.method_epsilon {
            if !(e >= 0.0) || !e.is_finite() {
                return bad(format!("method_epsilon = {e}"));
            }
        }
        if self.phase_retrieval && self.d != 2 {
            return bad("phase retrieval instances are quadratic (d = 2)".into());
        }
        if !(self.success_tol > 0.0) {
            return bad(format!("success_tol = {}", self.success_tol));
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        Ok(())
    }

    pub fn method_epsilon(&self) -> f64 {
        self.method_epsilon.unwrap_or(self.noise_epsilon)
    }

    /// Sign of `x0` is unidentifiable when every monomial is even.
    fn sign_ambiguous(&self) -> bool {
        self.phase_retrieval || (self.pure_nonlinear && self.d == 2)
    }

    fn noisy(&self) -> bool {
        self.noise_epsilon > 0.0
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub system: PolynomialSystem,
    pub x0: DVector<f64>,
    pub noise: DVector<f64>,
}

/// Draws one instance from the `(seed, trial_index)` stream.
///
/// Draw order: `A` column-major (or the phase-retrieval vectors `c_i`), then
/// `b`, then the noise direction.
pub fn generate_instance(spec: &ExperimentSpec, trial_index: u64) -> Result<Instance, ExperimentError> {
    spec.validate()?;
    let basis = MonomialBasis::new(spec.n, spec.d)?;
    let mut g = GaussianStream::new(spec.seed, trial_index);
    let rows = spec.n_eq;
    let (a, b) = if spec.phase_retrieval {
        let c = g.matrix(rows, spec.n);
        let a = DMatrix::from_fn(rows, basis.len(), |i, k| {
            let alpha = basis.get(k);
            if alpha.degree() != 2 {
                return 0.0;
            }
            let vars: Vec<usize> = alpha
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(j, _)| j)
                .collect();
            match vars.as_slice() {
                [j] => c[(i, *j)] * c[(i, *j)],
                [j, l] => 2.0 * c[(i, *j)] * c[(i, *l)],
                _ => unreachable!("degree-2 monomial has one or two variables"),
            }
        });
        (a, DVector::zeros(rows))
    } else {
        let mut a = g.matrix(rows, basis.len());
        let b = g.vector(rows);
        if spec.pure_nonlinear {
            for j in 0..spec.n {
                a.column_mut(j).fill(0.0);
            }
        }
        (a, b)
    };
    let noise = if spec.noisy() {
        let e = g.vector(rows);
        let norm = e.norm();
        e * (spec.noise_epsilon / norm)
    } else {
        DVector::zeros(rows)
    };
    let x0 = DVector::from_fn(spec.n, |j, _| if j < spec.k { 1.0 } else { 0.0 });
    let y = &a * basis.lift(x0.as_slice())? + &b + &noise;
    let system = PolynomialSystem::new(basis, a, b, y)?;
    Ok(Instance { system, x0, noise })
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub method: Method,
    pub success: bool,
    pub support_success: bool,
    pub relative_error: f64,
    pub wall_time_seconds: Option<f64>,
    pub solver_iterations: usize,
    pub error: Option<String>,
}

struct Estimate {
    x_hat: DVector<f64>,
    iterations: usize,
}

fn estimate(spec: &ExperimentSpec, method: Method, system: &PolynomialSystem) -> Result<Estimate, String> {
    let eps = spec.method_epsilon();
    if let Some(bm) = method.bp_method() {
        let cfg = BpConfig {
            method: bm,
            nonneg: spec.nonneg.unwrap_or(method.is_group()),
            noise_epsilon: eps,
            solver: spec.solver.clone(),
            ..BpConfig::default()
        };
        let res = bp::solve(system, &cfg).map_err(|e| e.to_string())?;
        Ok(Estimate {
            x_hat: res.x_hat,
            iterations: res.outer_iterations,
        })
    } else {
        // Greedy thresholds compare against the squared residual.
        let cfg = GreedyConfig {
            epsilon: eps * eps,
            ..GreedyConfig::default()
        };
        let res = match method {
            Method::Aga => greedy::aga(system, &cfg),
            _ => greedy::ega(system, &cfg),
        }
        .map_err(|e| e.to_string())?;
        Ok(Estimate {
            x_hat: res.x_hat,
            iterations: res.ls_solves as usize,
        })
    }
}

fn support_of(x: &DVector<f64>, tol: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= tol)
        .map(|(j, _)| j)
        .collect()
}

pub fn run_trial(spec: &ExperimentSpec, method: Method, trial_index: u64, instance: &Instance) -> TrialRecord {
    let start = Instant::now();
    let outcome = estimate(spec, method, &instance.system);
    let elapsed = start.elapsed().as_secs_f64();
    let x0 = &instance.x0;
    let x0_norm = x0.norm();
    let mut rec = TrialRecord {
        trial_index,
        method,
        success: false,
        support_success: false,
        relative_error: 0.0,
        wall_time_seconds: spec.timing.then_some(elapsed),
        solver_iterations: 0,
        error: None,
    };
    // A method that returns no estimate is scored as if it returned zero.
    let (x_hat, iterations) = match outcome {
        Ok(est) => (est.x_hat, est.iterations),
        Err(e) => {
            log::debug!("trial {trial_index} {method}: {e}");
            rec.error = Some(e);
            (DVector::zeros(x0.len()), 0)
        }
    };
    let mut err = (&x_hat - x0).norm();
    if spec.sign_ambiguous() {
        err = err.min((&x_hat + x0).norm());
    }
    rec.relative_error = if x0_norm > 0.0 { err / x0_norm } else { err };
    rec.support_success = rec.error.is_none()
        && support_of(&x_hat, SUPPORT_ZERO_TOL) == support_of(x0, SUPPORT_ZERO_TOL);
    rec.success = rec.error.is_none()
        && if spec.noisy() {
            rec.support_success
        } else {
            err <= spec.success_tol
        };
    rec.solver_iterations = iterations;
    rec
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// All trials of all methods, ordered by trial index then method order.
pub fn run_trials(spec: &ExperimentSpec, threads: usize) -> Result<Vec<TrialRecord>, ExperimentError> {
    spec.validate()?;
    let per_trial: Vec<Result<Vec<TrialRecord>, ExperimentError>> = with_pool(threads, || {
        (0..spec.trials as u64)
            .into_par_iter()
            .map(|t| {
                let inst = generate_instance(spec, t)?;
                Ok(spec
                    .methods
                    .iter()
                    .map(|&m| run_trial(spec, m, t, &inst))
                    .collect())
            })
            .collect()
    })?;
    let mut out = Vec::with_capacity(spec.trials * spec.methods.len());
    for r in per_trial {
        out.extend(r?);
    }
    out.sort_by_key(|r| r.trial_index);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment_id: String,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "N")]
    pub n_eq: usize,
    pub k: usize,
    pub trials: usize,
    pub noise_epsilon: f64,
    pub success_rate: f64,
    pub support_rate: f64,
    pub mean_rel_error: f64,
    pub mean_time_s: Option<f64>,
}

pub fn summarize(spec: &ExperimentSpec, records: &[TrialRecord]) -> Vec<SummaryRow> {
    spec.methods
        .iter()
        .map(|&m| {
            let recs: Vec<&TrialRecord> = records.iter().filter(|r| r.method == m).collect();
            let count = recs.len().max(1) as f64;
            let rate = |f: fn(&TrialRecord) -> bool| recs.iter().filter(|r| f(r)).count() as f64 / count;
            let mean_rel_error = recs.iter().map(|r| r.relative_error).sum::<f64>() / count;
            let mean_time_s = spec.timing.then(|| {
                recs.iter().filter_map(|r| r.wall_time_seconds).sum::<f64>() / count
            });
            SummaryRow {
                experiment_id: spec.experiment_id.clone(),
                method: m,
                n: spec.n,
                d: spec.d,
                n_eq: spec.n_eq,
                k: spec.k,
                trials: recs.len(),
                noise_epsilon: spec.noise_epsilon,
                success_rate: rate(|r| r.success),
                support_rate: rate(|r| r.support_success),
                mean_rel_error,
                mean_time_s,
            }
        })
        .collect()
}

pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<Vec<SummaryRow>, ExperimentError> {
    let records = run_trials(spec, threads)?;
    Ok(summarize(spec, &records))
}

pub const SUMMARY_HEADER: &str =
    "experiment_id,method,n,d,N,k,trials,noise_epsilon,success_rate,support_rate,mean_rel_error,mean_time_s";
pub const PHASE_HEADER: &str = "method,n,d,delta,k,trials,success_rate";

/// Writes rows; `header` controls whether the column line is emitted.
pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W, header: bool) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if header && rows.is_empty() {
        w.write_record(SUMMARY_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub delta: f64,
    pub k: usize,
    pub trials: usize,
    /// `None` when the cell hit its time budget.
    pub success_rate: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct PhaseGrid {
    pub ks: Vec<usize>,
    pub deltas: Vec<f64>,
    /// Per-cell wall-clock budget; cells exceeding it are reported as timed out.
    pub time_budget: Option<Duration>,
}

/// Success probability over a `(delta, k)` grid with `N = round(delta n)`.
pub fn phase_diagram(
    spec: &ExperimentSpec,
    grid: &PhaseGrid,
    threads: usize,
) -> Result<Vec<PhaseCell>, ExperimentError> {
    if let Some(&bad) = grid.deltas.iter().find(|&&d| !(d >= 1.0) || !d.is_finite()) {
        return Err(ExperimentError::InvalidSpec(format!("delta = {bad} (must be >= 1)")));
    }
    let mut cells = Vec::new();
    for &delta in &grid.deltas {
        for &k in &grid.ks {
            let cell_spec = ExperimentSpec {
                n_eq: (delta * spec.n as f64).round() as usize,
                k,
                ..spec.clone()
            };
            cell_spec.validate()?;
            for &m in &spec.methods {
                let rate = run_cell(&cell_spec, m, grid.time_budget, threads)?;
                cells.push(PhaseCell {
                    method: m,
                    n: spec.n,
                    d: spec.d,
                    delta,
                    k,
                    trials: spec.trials,
                    success_rate: rate,
                });
            }
        }
    }
    // Method-major order reads naturally as one curve per (method, delta).
    cells.sort_by(|a, b| {
        let ia = spec.methods.iter().position(|&m| m == a.method);
        let ib = spec.methods.iter().position(|&m| m == b.method);
        ia.cmp(&ib)
    });
    Ok(cells)
}

fn run_cell(
    spec: &ExperimentSpec,
    method: Method,
    budget: Option<Duration>,
    threads: usize,
) -> Result<Option<f64>, ExperimentError> {
    let start = Instant::now();
    let results: Vec<Option<bool>> = with_pool(threads, || {
        (0..spec.trials as u64)
            .into_par_iter()
            .map(|t| {
                if budget.is_some_and(|b| start.elapsed() > b) {
                    return Ok(None);
                }
                let inst = generate_instance(spec, t)?;
                Ok(Some(run_trial(spec, method, t, &inst).success))
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })??;
    if results.iter().any(Option::is_none) {
        log::warn!("phase cell {method} N={} k={} timed out", spec.n_eq, spec.k);
        return Ok(None);
    }
    let ok = results.iter().filter(|r| **r == Some(true)).count();
    Ok(Some(ok as f64 / spec.trials as f64))
}

pub fn write_phase_csv<W: Write>(cells: &[PhaseCell], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    if cells.is_empty() {
        w.write_record(PHASE_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

/// Named experiment configurations.
#[derive(Clone, Debug)]
pub enum Preset {
    /// One or more summary experiments written to a single CSV.
    Summary(Vec<ExperimentSpec>),
    Phase(ExperimentSpec, PhaseGrid),
}

pub const PRESET_NAMES: [&str; 11] = [
    "table1", "table2", "table3", "table4", "table5", "table6", "pure-d4", "fig1", "fig2", "fig5",
    "fig6",
];

fn base(id: &str, n: usize, d: usize, n_eq: usize, k: usize, methods: &[Method]) -> ExperimentSpec {
    ExperimentSpec {
        experiment_id: id.into(),
        n,
        d,
        n_eq,
        k,
        methods: methods.to_vec(),
        ..ExperimentSpec::default()
    }
}

/// Preset by name; `trials` and `seed` are applied to every experiment.
pub fn preset(name: &str, trials: usize, seed: u64) -> Option<Preset> {
    use Method::*;
    let bp_and_greedy = [Rl1, L1l2, Irl1l2, Sl1l2, Aga, Ega];
    let fix = |mut s: ExperimentSpec| {
        s.trials = trials;
        s.seed = seed;
        s
    };
    let p = match name {
        "table1" => Preset::Summary(vec![fix(base(name, 20, 2, 25, 3, &bp_and_greedy))]),
        "table2" => Preset::Summary(vec![fix(base(name, 5, 4, 50, 2, &bp_and_greedy))]),
        "table3" => Preset::Summary(vec![fix(ExperimentSpec {
            pure_nonlinear: true,
            ..base(name, 20, 2, 25, 3, &bp_and_greedy)
        })]),
        "table4" => Preset::Summary(vec![fix(ExperimentSpec {
            noise_epsilon: 3.0,
            ..base(name, 20, 2, 50, 3, &bp_and_greedy)
        })]),
        "table5" => Preset::Summary(vec![fix(ExperimentSpec {
            noise_epsilon: 3.0,
            ..base(name, 5, 4, 50, 2, &bp_and_greedy)
        })]),
        "table6" => Preset::Summary(vec![fix(ExperimentSpec {
            phase_retrieval: true,
            ..base(name, 20, 2, 25, 3, &[Irl1l2, Sl1l2, Aga, Ega])
        })]),
        "pure-d4" => Preset::Summary(vec![fix(ExperimentSpec {
            pure_nonlinear: true,
            ..base(name, 5, 4, 50, 2, &bp_and_greedy)
        })]),
        "fig1" | "fig2" => {
            let n = if name == "fig1" { 10 } else { 20 };
            Preset::Phase(
                fix(base(name, n, 2, n, 0, &[Rl1, Irl1l2, Sl1l2, Aga])),
                PhaseGrid {
                    ks: (0..=8).collect(),
                    deltas: vec![1.0, 2.0, 3.0, 5.0],
                    time_budget: None,
                },
            )
        }
        "fig5" => Preset::Summary(
            (1..=10)
                .map(|e| {
                    fix(ExperimentSpec {
                        noise_epsilon: e as f64,
                        ..base(&format!("fig5-eps{e}"), 20, 2, 50, 3, &[Irl1l2, Sl1l2, Aga, Ega])
                    })
                })
                .collect(),
        ),
        "fig6" => Preset::Summary(
            [1.0, 2.0, 3.0, 3.5, 4.0, 5.0, 6.0, 8.0, 10.0]
                .iter()
                .map(|&e| {
                    fix(ExperimentSpec {
                        noise_epsilon: 3.0,
                        method_epsilon: Some(e),
                        ..base(&format!("fig6-eps{e}"), 20, 2, 50, 3, &[Irl1l2, Sl1l2, Aga, Ega])
                    })
                })
                .collect(),
        ),
        _ => return None,
    };
    Some(p)
}

/// Pearson correlation coefficient; `NaN` for constant inputs.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(methods: &[Method]) -> ExperimentSpec {
        ExperimentSpec {
            n: 4,
            d: 2,
            n_eq: 10,
            k: 2,
            trials: 3,
            seed: 5,
            methods: methods.to_vec(),
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_instance_is_exact() {
        let inst = generate_instance(&small(&[Method::Ega]), 0).unwrap();
        let r = inst.system.evaluate(inst.x0.as_slice()).unwrap();
        assert!(r.norm() < 1e-12);
        assert_eq!(inst.x0.as_slice(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn instances_are_reproducible() {
        let spec = small(&[Method::Ega]);
        let a = generate_instance(&spec, 7).unwrap();
        let b = generate_instance(&spec, 7).unwrap();
        assert_eq!(a.system.a(), b.system.a());
        assert_eq!(a.system.y(), b.system.y());
        let c = generate_instance(&spec, 8).unwrap();
        assert_ne!(a.system.a(), c.system.a());
    }

    #[test]
    fn noise_has_exact_norm() {
        let spec = ExperimentSpec {
            noise_epsilon: 3.0,
            ..small(&[Method::Ega])
        };
        let inst = generate_instance(&spec, 1).unwrap();
        let r = inst.system.evaluate(inst.x0.as_slice()).unwrap();
        assert!((r.norm() - 3.0).abs() < 1e-12);
        assert!((inst.noise.norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pure_nonlinear_zeroes_linear_columns() {
        let spec = ExperimentSpec {
            pure_nonlinear: true,
            ..small(&[Method::Ega])
        };
        let inst = generate_instance(&spec, 0).unwrap();
        for j in 0..4 {
            assert_eq!(inst.system.a().column(j).norm(), 0.0);
        }
        assert!(inst.system.a().column(4).norm() > 0.0);
    }

    #[test]
    fn phase_retrieval_rows_are_squared_projections() {
        let spec = ExperimentSpec {
            phase_retrieval: true,
            ..small(&[Method::Ega])
        };
        let inst = generate_instance(&spec, 2).unwrap();
        assert_eq!(inst.system.b().norm(), 0.0);
        // y_i = (c_i^T x)^2 >= 0 for every x; check on a random point
        let x = [0.3, -1.1, 0.7, 2.0];
        let phi = inst.system.basis().lift(&x).unwrap();
        let v = inst.system.a() * phi;
        assert!(v.iter().all(|&t| t >= -1e-12));
    }

    #[test]
    fn one_record_per_method_and_trial() {
        let spec = ExperimentSpec {
            trials: 1,
            ..small(&[Method::Aga, Method::Ega])
        };
        let recs = run_trials(&spec, 1).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.success));
    }

    #[test]
    fn summary_csv_header_and_determinism() {
        let spec = small(&[Method::Aga, Method::Ega, Method::Irl1l2]);
        let mut one = Vec::new();
        write_summary_csv(&run_experiment(&spec, 1).unwrap(), &mut one, true).unwrap();
        let mut four = Vec::new();
        write_summary_csv(&run_experiment(&spec, 4).unwrap(), &mut four, true).unwrap();
        assert_eq!(one, four);
        let text = String::from_utf8(one).unwrap();
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn k_zero_row_is_always_recovered() {
        let spec = small(&[Method::Aga, Method::Irl1l2]);
        let grid = PhaseGrid {
            ks: vec![0],
            deltas: vec![2.0],
            time_budget: None,
        };
        let cells = phase_diagram(&spec, &grid, 1).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(cells.iter().all(|c| c.success_rate == Some(1.0)));
        let mut out = Vec::new();
        write_phase_csv(&cells, &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with(PHASE_HEADER));
    }

    #[test]
    fn invalid_specs() {
        let mut s = small(&[Method::Ega]);
        s.k = 9;
        assert!(s.validate().is_err());
        let s = ExperimentSpec {
            phase_retrieval: true,
            d: 3,
            ..small(&[Method::Ega])
        };
        assert!(s.validate().is_err());
        let grid = PhaseGrid {
            ks: vec![1],
            deltas: vec![0.5],
            time_budget: None,
        };
        assert!(phase_diagram(&small(&[Method::Ega]), &grid, 1).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("lasso".parse::<Method>().is_err());
    }

    #[test]
    fn presets_exist() {
        for name in PRESET_NAMES {
            assert!(preset(name, 2, 1).is_some(), "{name}");
        }
        assert!(preset("table9", 2, 1).is_none());
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
    }
}
