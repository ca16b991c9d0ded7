//! Basis-pursuit drivers over the lifted system.
//!
//! Every method reduces to a sequence of conic programs sharing one
//! [`ConicSolver`]: the reweighting schemes only change group multipliers, so
//! the projection factors are computed once and iterates are warm-started.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conic::{
    project_constraint, ConicError, ConicProblem, ConicSolver, Constraint, Group, SolverOptions,
    SolverStatus, TraceRow,
};
use crate::extract::{self, ExtractError, ExtractionReport};
use crate::grouping::{GroupStructure, GroupingError};
use crate::linalg::select_columns;
use crate::poly::PolynomialSystem;

/// Relative tolerance of the polynomial residual check.
pub const VERIFY_RTOL: f64 = 1e-6;
/// Relative stop tolerance of the selective loop.
pub const SELECTIVE_STOP_RTOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BpMethod {
    L1,
    ReweightedL1,
    GroupL1L2,
    IRGroupL1L2,
    SelGroupL1L2,
}

#[derive(Clone, Debug)]
pub struct BpConfig {
    pub method: BpMethod,
    /// Nonnegativity on even-degree monomials.
    pub nonneg: bool,
    /// `0` gives equality constraints.
    pub noise_epsilon: f64,
    pub reweight_iterations: usize,
    pub reweight_eps: f64,
    pub solver: SolverOptions,
}

impl Default for BpConfig {
    fn default() -> Self {
        BpConfig {
            method: BpMethod::IRGroupL1L2,
            nonneg: true,
            noise_epsilon: 0.0,
            reweight_iterations: 10,
            reweight_eps: 1e-3,
            solver: SolverOptions::default(),
        }
    }
}

impl BpConfig {
    pub fn with_method(method: BpMethod) -> Self {
        BpConfig {
            method,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum BpError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Conic(#[from] ConicError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub phi_hat: DVector<f64>,
    pub x_hat: DVector<f64>,
    pub group_support: Vec<usize>,
    pub solver_status: SolverStatus,
    pub verified: bool,
    /// `||y - b - A lift(x_hat)||_2`.
    pub residual_norm: f64,
    /// Every degree-one column of `A` is nonzero.
    pub assumption1: bool,
    pub extraction: ExtractionReport,
    /// Number of conic solves (reweighting rounds).
    pub outer_iterations: usize,
    /// Selective loop hit its iteration cap without meeting the stop test.
    pub non_terminating: bool,
    /// Group support size after each round.
    pub support_history: Vec<usize>,
    pub final_multipliers: Vec<f64>,
    pub trace: Vec<TraceRow>,
}

/// Shared setup for one system: grouping plus a factorized conic solver.
struct Driver<'a> {
    system: &'a PolynomialSystem,
    config: &'a BpConfig,
    groups: GroupStructure,
    solver: ConicSolver,
}

impl<'a> Driver<'a> {
    fn new(
        system: &'a PolynomialSystem,
        config: &'a BpConfig,
        singleton: bool,
    ) -> Result<Self, BpError> {
        validate(config)?;
        let groups = GroupStructure::build(system.basis(), system.a())?;
        let constraint = if config.noise_epsilon > 0.0 {
            Constraint::Ball(config.noise_epsilon)
        } else {
            Constraint::Equality
        };
        let weights = groups.weights().clone();
        let mut problem = if singleton {
            ConicProblem::l1(system.a().clone(), system.rhs(), weights, constraint)
        } else {
            ConicProblem {
                a: system.a().clone(),
                r: system.rhs(),
                weights,
                groups: groups
                    .index_sets()
                    .iter()
                    .map(|set| Group {
                        indices: set.clone(),
                        multiplier: 1.0,
                    })
                    .collect(),
                constraint,
                nonneg: Vec::new(),
            }
        };
        if config.nonneg {
            problem.nonneg = groups
                .even_set()
                .iter()
                .copied()
                .filter(|&k| groups.is_active(k))
                .collect();
        }
        let solver = ConicSolver::new(problem)?;
        Ok(Driver {
            system,
            config,
            groups,
            solver,
        })
    }

    fn run(&mut self, multipliers: &[f64]) -> Result<(DVector<f64>, SolverStatus, Vec<TraceRow>), BpError> {
        if multipliers.iter().all(|&m| m == 0.0) {
            let (phi, status) = self.min_norm_feasible();
            return Ok((phi, status, Vec::new()));
        }
        let sol = self.solver.solve_with(multipliers, &self.config.solver)?;
        Ok((sol.phi, sol.status, sol.trace))
    }

    /// Projection of zero onto the feasible set, over active columns.
    fn min_norm_feasible(&self) -> (DVector<f64>, SolverStatus) {
        let problem = self.solver.problem();
        let active = self.groups.active_columns();
        let sub = select_columns(&problem.a, active);
        let v = DVector::zeros(active.len());
        let x = project_constraint(&v, &sub, &problem.r, problem.constraint);
        let mut phi = DVector::zeros(problem.a.ncols());
        for (p, &k) in active.iter().enumerate() {
            phi[k] = x[p];
        }
        if !problem.nonneg.is_empty() {
            log::warn!("all multipliers zero: nonnegativity is not enforced on the minimum-norm point");
        }
        let status = SolverStatus {
            converged: true,
            iterations: 0,
            primal_residual: problem.constraint_violation(&phi),
            dual_residual: 0.0,
            objective: 0.0,
            polished: false,
        };
        (phi, status)
    }

    fn finish(
        &self,
        phi: DVector<f64>,
        status: SolverStatus,
        trace: Vec<TraceRow>,
        outer_iterations: usize,
        support_history: Vec<usize>,
        final_multipliers: Vec<f64>,
    ) -> Result<SolveResult, BpError> {
        let basis = self.system.basis();
        let extraction = extract::extract(basis, &self.groups, &phi, self.system)?;
        let x_hat = DVector::from_vec(extraction.x_hat.clone());
        let residual_norm = extraction.verify_residual;
        let verified = residual_norm
            <= self.config.noise_epsilon + VERIFY_RTOL * (1.0 + self.system.y().norm());
        let assumption1 = (0..basis.n()).all(|j| self.groups.is_active(j));
        if !assumption1 {
            log::debug!("degree-one column missing; using {:?}", extraction.method_used);
        }
        Ok(SolveResult {
            group_support: extraction.support.clone(),
            phi_hat: phi,
            x_hat,
            solver_status: status,
            verified,
            residual_norm,
            assumption1,
            extraction,
            outer_iterations,
            non_terminating: false,
            support_history,
            final_multipliers,
            trace,
        })
    }

    fn support_size(&self, phi: &DVector<f64>) -> usize {
        self.groups.support(phi, extract::zero_tolerance(phi)).len()
    }
}

fn validate(config: &BpConfig) -> Result<(), BpError> {
    let bad = |m: String| Err(BpError::InvalidConfig(m));
    if !(config.noise_epsilon >= 0.0) || !config.noise_epsilon.is_finite() {
        return bad(format!("noise_epsilon = {}", config.noise_epsilon));
    }
    let reweighted = matches!(
        config.method,
        BpMethod::IRGroupL1L2 | BpMethod::ReweightedL1
    );
    if reweighted && !(config.reweight_eps > 0.0) {
        return bad(format!("reweight_eps = {}", config.reweight_eps));
    }
    if reweighted && config.reweight_iterations == 0 {
        return bad("reweight_iterations must be at least 1".into());
    }
    config.solver.validate()?;
    Ok(())
}

/// Dispatch on `config.method`.
pub fn solve(system: &PolynomialSystem, config: &BpConfig) -> Result<SolveResult, BpError> {
    match config.method {
        BpMethod::L1 => solve_l1(system, config),
        BpMethod::ReweightedL1 => solve_reweighted_l1(system, config),
        BpMethod::GroupL1L2 => solve_group(system, config, &vec![1.0; system.n()]),
        BpMethod::IRGroupL1L2 => solve_ir_group(system, config),
        BpMethod::SelGroupL1L2 => solve_selective(system, config),
    }
}

/// Weighted l1 minimization.
pub fn solve_l1(system: &PolynomialSystem, config: &BpConfig) -> Result<SolveResult, BpError> {
    let mut driver = Driver::new(system, config, true)?;
    let mults = driver.solver.problem().multipliers();
    let (phi, status, trace) = driver.run(&mults)?;
    let hist = vec![driver.support_size(&phi)];
    driver.finish(phi, status, trace, 1, hist, mults)
}

/// l1 with multipliers `1 / (w_k |phi_k| + eps)` updated between solves.
pub fn solve_reweighted_l1(
    system: &PolynomialSystem,
    config: &BpConfig,
) -> Result<SolveResult, BpError> {
    let mut driver = Driver::new(system, config, true)?;
    let mut mults = driver.solver.problem().multipliers();
    let cols: Vec<usize> = driver
        .solver
        .problem()
        .groups
        .iter()
        .map(|g| g.indices[0])
        .collect();
    let mut hist = Vec::new();
    let mut last = None;
    for t in 0..config.reweight_iterations {
        let (phi, status, trace) = driver.run(&mults)?;
        hist.push(driver.support_size(&phi));
        let used = mults.clone();
        if t + 1 < config.reweight_iterations {
            let w = driver.groups.weights();
            for (mu, &k) in mults.iter_mut().zip(&cols) {
                *mu = 1.0 / (w[k] * phi[k].abs() + config.reweight_eps);
            }
        }
        last = Some((phi, status, trace, used));
    }
    let (phi, status, trace, used) = last.expect("at least one iteration");
    driver.finish(phi, status, trace, config.reweight_iterations, hist, used)
}

/// `min sum_j mu_j ||W_j phi||_2` under the configured constraint.
///
/// All-zero multipliers make the objective constant; the minimum-norm
/// feasible point is returned.
pub fn solve_group(
    system: &PolynomialSystem,
    config: &BpConfig,
    multipliers: &[f64],
) -> Result<SolveResult, BpError> {
    if multipliers.len() != system.n() {
        return Err(BpError::InvalidConfig(format!(
            "{} multipliers for {} variables",
            multipliers.len(),
            system.n()
        )));
    }
    let mut driver = Driver::new(system, config, false)?;
    let (phi, status, trace) = driver.run(multipliers)?;
    let hist = vec![driver.support_size(&phi)];
    driver.finish(phi, status, trace, 1, hist, multipliers.to_vec())
}

/// Iteratively reweighted group minimization, `mu_j = 1 / (||W_j phi|| + eps)`.
pub fn solve_ir_group(
    system: &PolynomialSystem,
    config: &BpConfig,
) -> Result<SolveResult, BpError> {
    let mut driver = Driver::new(system, config, false)?;
    let mut mults = vec![1.0; system.n()];
    let mut hist = Vec::new();
    let mut last = None;
    for t in 0..config.reweight_iterations {
        let (phi, status, trace) = driver.run(&mults)?;
        hist.push(driver.support_size(&phi));
        let used = mults.clone();
        if t + 1 < config.reweight_iterations {
            let norms = driver.groups.group_norms(&phi);
            for (mu, v) in mults.iter_mut().zip(norms.iter()) {
                *mu = 1.0 / (v + config.reweight_eps);
            }
        }
        last = Some((phi, status, trace, used));
    }
    let (phi, status, trace, used) = last.expect("at least one iteration");
    driver.finish(phi, status, trace, config.reweight_iterations, hist, used)
}

/// Index of the largest value among `candidates`, lowest index on ties.
fn argmax_lowest(values: &DVector<f64>, candidates: impl Iterator<Item = usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for j in candidates {
        match best {
            Some(b) if values[j] <= values[b] => {}
            _ => best = Some(j),
        }
    }
    best
}

/// Selective zeroing: after each solve the multiplier of the largest group
/// is set to zero, until the weighted objective of the last estimate vanishes.
pub fn solve_selective(
    system: &PolynomialSystem,
    config: &BpConfig,
) -> Result<SolveResult, BpError> {
    let mut driver = Driver::new(system, config, false)?;
    let n = system.n();
    let stop = SELECTIVE_STOP_RTOL * (1.0 + system.y().norm());
    let mut mults = vec![1.0; n];
    let mut hist = Vec::new();
    let mut last = None;
    let mut done = false;
    for _ in 0..n {
        let (phi, status, trace) = driver.run(&mults)?;
        hist.push(driver.support_size(&phi));
        let norms = driver.groups.group_norms(&phi);
        let k = argmax_lowest(&norms, (0..n).filter(|&j| mults[j] != 0.0))
            .expect("a nonzero multiplier remains inside the loop");
        mults[k] = 0.0;
        let weighted: f64 = mults.iter().zip(norms.iter()).map(|(m, v)| m * v).sum();
        last = Some((phi, status, trace));
        if weighted <= stop {
            done = true;
            break;
        }
    }
    let iterations = hist.len();
    let (phi, status, trace) = last.expect("n >= 1");
    let mut res = driver.finish(phi, status, trace, iterations, hist, mults)?;
    res.non_terminating = !done;
    Ok(res)
}
