//! First-order solver for weighted overlapping group-norm minimization.
//!
//! Solves
//!
//! ```text
//! minimize   sum_j mu_j || W_j phi ||_2
//! subject to A phi = r            (Equality)
//!        or  || A phi - r ||_2 <= eps   (Ball)
//!            phi_k >= 0 for k in the nonnegative set
//! ```
//!
//! with consensus ADMM. Variables are rescaled to `psi = W phi` so that every
//! group prox is a plain block soft-threshold. Each group owns a copy of the
//! entries it covers; the global update is a count-weighted projection onto
//! the constraint set, whose factorization depends only on `A` and the group
//! layout and is reused across calls with different multipliers. In ball
//! mode an auxiliary residual `e = A phi - r` is split off and projected onto
//! the `eps`-ball separately.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{lstsq_min_norm, psd_pinv, select_columns};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("equality constraints are inconsistent (least-squares residual {residual:.3e})")]
    InfeasibleEquality { residual: f64 },
    #[error("no point within {radius} of the data (least-squares residual {residual:.3e})")]
    InfeasibleBall { residual: f64, radius: f64 },
    #[error("non-finite iterate at iteration {iteration}")]
    NumericalBreakdown { iteration: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constraint {
    Equality,
    /// `|| A phi - r ||_2 <= eps`; `f64::INFINITY` removes the constraint.
    Ball(f64),
}

/// A group of columns sharing one Euclidean norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub indices: Vec<usize>,
    pub multiplier: f64,
}

#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub a: DMatrix<f64>,
    pub r: DVector<f64>,
    /// Per-column weights `w_k > 0` for every column that appears in a group.
    pub weights: DVector<f64>,
    pub groups: Vec<Group>,
    pub constraint: Constraint,
    pub nonneg: Vec<usize>,
}

impl ConicProblem {
    /// Singleton groups: weighted l1 minimization.
    pub fn l1(
        a: DMatrix<f64>,
        r: DVector<f64>,
        weights: DVector<f64>,
        constraint: Constraint,
    ) -> Self {
        let groups = (0..a.ncols())
            .filter(|&k| weights[k] > 0.0)
            .map(|k| Group {
                indices: vec![k],
                multiplier: 1.0,
            })
            .collect();
        ConicProblem {
            a,
            r,
            weights,
            groups,
            constraint,
            nonneg: Vec::new(),
        }
    }

    pub fn multipliers(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.multiplier).collect()
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let (rows, cols) = self.a.shape();
        let bad = |msg: String| Err(ConicError::InvalidProblem(msg));
        if self.r.len() != rows {
            return bad(format!("r has length {}, A has {} rows", self.r.len(), rows));
        }
        if self.weights.len() != cols {
            return bad(format!(
                "weights have length {}, A has {} columns",
                self.weights.len(),
                cols
            ));
        }
        if self.a.iter().chain(self.r.iter()).any(|v| !v.is_finite()) {
            return bad("non-finite data".into());
        }
        for (j, g) in self.groups.iter().enumerate() {
            if !(g.multiplier >= 0.0) || !g.multiplier.is_finite() {
                return bad(format!("group {j} has multiplier {}", g.multiplier));
            }
            for &k in &g.indices {
                if k >= cols {
                    return bad(format!("group {j} references column {k}"));
                }
                if !(self.weights[k] > 0.0) || !self.weights[k].is_finite() {
                    return bad(format!("column {k} in group {j} has weight {}", self.weights[k]));
                }
            }
        }
        if let Constraint::Ball(eps) = self.constraint {
            if !(eps >= 0.0) {
                return bad(format!("ball radius {eps}"));
            }
        }
        if let Some(&k) = self.nonneg.iter().find(|&&k| k >= cols) {
            return bad(format!("nonnegative index {k} out of range"));
        }
        Ok(())
    }

    /// `sum_j mu_j ||W_j phi||` with the given multipliers.
    pub fn objective(&self, phi: &DVector<f64>, multipliers: &[f64]) -> f64 {
        self.groups
            .iter()
            .zip(multipliers)
            .map(|(g, &mu)| {
                if mu == 0.0 {
                    return 0.0;
                }
                let s: f64 = g
                    .indices
                    .iter()
                    .map(|&k| (self.weights[k] * phi[k]).powi(2))
                    .sum();
                mu * s.sqrt()
            })
            .sum()
    }

    pub fn constraint_violation(&self, phi: &DVector<f64>) -> f64 {
        let res = (&self.a * phi - &self.r).norm();
        match self.constraint {
            Constraint::Equality => res,
            Constraint::Ball(eps) => (res - eps).max(0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub max_iterations: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub penalty: f64,
    pub adaptive_penalty: bool,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
    /// Re-solve least squares on the detected support (equality mode only).
    pub polish: bool,
    /// Start from the previous call's iterate on the same [`ConicSolver`].
    pub warm_start: bool,
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 50_000,
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            penalty: 1.0,
            adaptive_penalty: true,
            relaxation: 1.6,
            polish: true,
            warm_start: true,
            trace: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), ConicError> {
        let ok = self.max_iterations >= 1
            && self.primal_tol > 0.0
            && self.dual_tol > 0.0
            && self.penalty > 0.0
            && self.relaxation > 0.0
            && self.relaxation < 2.0;
        if ok {
            Ok(())
        } else {
            Err(ConicError::InvalidProblem(format!(
                "invalid solver options {self:?}"
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverStatus {
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    pub polished: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    /// Objective of the running average of the projected iterates plus
    /// `penalty * violation` of that average (affine and sign constraints).
    pub averaged_merit: f64,
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "iteration,objective,primal_res,dual_res")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e},{:e}", r.iteration, r.objective, r.primal_res, r.dual_res)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub phi: DVector<f64>,
    pub status: SolverStatus,
    pub trace: Vec<TraceRow>,
}

/// Block soft-threshold of one group copy (scaled coordinates).
///
/// Entries flagged in `nonneg` are clamped at zero first; for the Euclidean
/// norm this composition is the exact prox of `norm + orthant indicator`.
pub fn prox_group(v: &[f64], multiplier: f64, step: f64, nonneg: &[bool]) -> Vec<f64> {
    let mut out = v.to_vec();
    shrink_in_place(&mut out, multiplier * step, |i| nonneg.get(i).copied().unwrap_or(false));
    out
}

fn shrink_in_place(v: &mut [f64], threshold: f64, nonneg: impl Fn(usize) -> bool) {
    for (i, x) in v.iter_mut().enumerate() {
        if nonneg(i) && *x < 0.0 {
            *x = 0.0;
        }
    }
    if threshold <= 0.0 {
        return;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= threshold {
        v.iter_mut().for_each(|x| *x = 0.0);
    } else {
        let scale = 1.0 - threshold / norm;
        v.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Euclidean projection of `v` onto `{phi : A phi = r}` or the ball preimage
/// `{phi : ||A phi - r|| <= eps}`.
///
/// Rank-deficient `A` is handled through the pseudo-inverse; for an
/// inconsistent equality the result lies on the least-squares set.
pub fn project_constraint(
    v: &DVector<f64>,
    a: &DMatrix<f64>,
    r: &DVector<f64>,
    constraint: Constraint,
) -> DVector<f64> {
    match constraint {
        Constraint::Equality => {
            let k = a * a.transpose();
            let lambda = psd_pinv(&k) * (a * v - r);
            v - a.transpose() * lambda
        }
        Constraint::Ball(eps) => {
            let res = a * v - r;
            if !eps.is_finite() || res.norm() <= eps {
                return v.clone();
            }
            project_ball_preimage(v, a, r, eps)
        }
    }
}

// x(t) = argmin ||x - v||^2 + t ||A x - r||^2 ; ||A x(t) - r|| decreases in t.
fn project_ball_preimage(
    v: &DVector<f64>,
    a: &DMatrix<f64>,
    r: &DVector<f64>,
    eps: f64,
) -> DVector<f64> {
    let m = a.ncols();
    let ata = a.transpose() * a;
    let atr = a.transpose() * r;
    let solve = |t: f64| -> DVector<f64> {
        let lhs = DMatrix::identity(m, m) + &ata * t;
        let rhs = v + &atr * t;
        lhs.cholesky()
            .expect("I + t A^T A is positive definite")
            .solve(&rhs)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = solve(hi);
    let mut guard = 0;
    while (a * &x - r).norm() > eps && guard < 200 {
        lo = hi;
        hi *= 4.0;
        x = solve(hi);
        guard += 1;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let xm = solve(mid);
        if (a * &xm - r).norm() > eps {
            lo = mid;
        } else {
            hi = mid;
            x = xm;
        }
    }
    x
}

/// Copy layout and projection factors for one problem structure.
pub struct ConicSolver {
    problem: ConicProblem,
    free: Vec<usize>,
    scale: Vec<f64>,
    scaled_a: DMatrix<f64>,
    /// `C^-1 Ã^T`, `M' x N`.
    weighted_at: DMatrix<f64>,
    /// `(Ã C^-1 Ã^T [+ I])^+`.
    kinv: DMatrix<f64>,
    copy_pos: Vec<usize>,
    group_ranges: Vec<(usize, usize)>,
    copy_nonneg: Vec<bool>,
    counts: Vec<f64>,
    state: Option<State>,
}

#[derive(Clone)]
struct State {
    z: Vec<f64>,
    u: Vec<f64>,
    s: Vec<f64>,
    us: Vec<f64>,
    rho: f64,
}

impl ConicSolver {
    pub fn new(problem: ConicProblem) -> Result<Self, ConicError> {
        problem.validate()?;
        let cols = problem.a.ncols();
        let mut pos_of = vec![usize::MAX; cols];
        let mut free = Vec::new();
        for g in &problem.groups {
            for &k in &g.indices {
                if pos_of[k] == usize::MAX {
                    pos_of[k] = 0;
                    free.push(k);
                }
            }
        }
        free.sort_unstable();
        for (p, &k) in free.iter().enumerate() {
            pos_of[k] = p;
        }
        let scale: Vec<f64> = free.iter().map(|&k| problem.weights[k]).collect();
        let mut scaled_a = select_columns(&problem.a, &free);
        for (p, mut col) in scaled_a.column_iter_mut().enumerate() {
            col /= scale[p];
        }
        let mut is_nonneg = vec![false; cols];
        for &k in &problem.nonneg {
            is_nonneg[k] = true;
        }
        let mut copy_pos = Vec::new();
        let mut copy_nonneg = Vec::new();
        let mut group_ranges = Vec::with_capacity(problem.groups.len());
        let mut counts = vec![0.0; free.len()];
        for g in &problem.groups {
            let start = copy_pos.len();
            for &k in &g.indices {
                copy_pos.push(pos_of[k]);
                copy_nonneg.push(is_nonneg[k]);
                counts[pos_of[k]] += 1.0;
            }
            group_ranges.push((start, copy_pos.len()));
        }
        let mut weighted_at = scaled_a.transpose();
        for (p, mut row) in weighted_at.row_iter_mut().enumerate() {
            row /= counts[p];
        }
        let mut k = &scaled_a * &weighted_at;
        if matches!(problem.constraint, Constraint::Ball(_)) {
            for i in 0..k.nrows() {
                k[(i, i)] += 1.0;
            }
        }
        let kinv = psd_pinv(&k);
        let solver = ConicSolver {
            problem,
            free,
            scale,
            scaled_a,
            weighted_at,
            kinv,
            copy_pos,
            group_ranges,
            copy_nonneg,
            counts,
            state: None,
        };
        solver.check_feasible()?;
        Ok(solver)
    }

    pub fn problem(&self) -> &ConicProblem {
        &self.problem
    }

    fn check_feasible(&self) -> Result<(), ConicError> {
        let r = &self.problem.r;
        let slack = 1e-9 * (1.0 + r.norm());
        match self.problem.constraint {
            Constraint::Equality => {
                let x = self.project(&DVector::zeros(self.free.len()), None).0;
                let residual = (&self.scaled_a * &x - r).norm();
                if residual > slack {
                    return Err(ConicError::InfeasibleEquality { residual });
                }
            }
            Constraint::Ball(radius) => {
                let residual = lstsq_min_norm(&self.scaled_a, r).1.sqrt();
                if residual > radius + slack {
                    return Err(ConicError::InfeasibleBall { residual, radius });
                }
            }
        }
        Ok(())
    }

    /// Weighted projection of `(v, e_bar)` onto `Ã x - e = r`.
    fn project(&self, v: &DVector<f64>, e_bar: Option<&DVector<f64>>) -> (DVector<f64>, DVector<f64>) {
        let mut t = &self.scaled_a * v - &self.problem.r;
        if let Some(e) = e_bar {
            t -= e;
        }
        let lambda = &self.kinv * t;
        let x = v - &self.weighted_at * &lambda;
        let e = match e_bar {
            Some(e) => e + lambda,
            None => DVector::zeros(0),
        };
        (x, e)
    }

    fn scaled_objective(&self, psi: &DVector<f64>, multipliers: &[f64]) -> f64 {
        self.group_ranges
            .iter()
            .zip(multipliers)
            .map(|(&(a, b), &mu)| {
                if mu == 0.0 {
                    0.0
                } else {
                    mu * (a..b).map(|c| psi[self.copy_pos[c]].powi(2)).sum::<f64>().sqrt()
                }
            })
            .sum()
    }

    pub fn solve(&mut self, options: &SolverOptions) -> Result<ConicSolution, ConicError> {
        let multipliers = self.problem.multipliers();
        self.solve_with(&multipliers, options)
    }

    /// Solve with the given group multipliers (same length as the groups).
    pub fn solve_with(
        &mut self,
        multipliers: &[f64],
        options: &SolverOptions,
    ) -> Result<ConicSolution, ConicError> {
        options.validate()?;
        if multipliers.len() != self.problem.groups.len()
            || multipliers.iter().any(|&mu| !(mu >= 0.0) || !mu.is_finite())
        {
            return Err(ConicError::InvalidProblem("bad multipliers".into()));
        }
        let m = self.free.len();
        let ncopies = self.copy_pos.len();
        let rows = self.problem.r.len();
        let ball = match self.problem.constraint {
            Constraint::Ball(eps) => Some(eps),
            Constraint::Equality => None,
        };
        let r_norm = self.problem.r.norm();

        if let Some(eps) = ball {
            if r_norm <= eps {
                // Zero is feasible and has zero objective.
                let phi = DVector::zeros(self.problem.a.ncols());
                self.state = None;
                return Ok(ConicSolution {
                    phi,
                    status: SolverStatus {
                        converged: true,
                        iterations: 0,
                        primal_residual: 0.0,
                        dual_residual: 0.0,
                        objective: 0.0,
                        polished: false,
                    },
                    trace: Vec::new(),
                });
            }
        }

        let mut st = match (&self.state, options.warm_start) {
            (Some(s), true) => s.clone(),
            _ => State {
                z: vec![0.0; ncopies],
                u: vec![0.0; ncopies],
                s: vec![0.0; if ball.is_some() { rows } else { 0 }],
                us: vec![0.0; if ball.is_some() { rows } else { 0 }],
                rho: options.penalty,
            },
        };
        let alpha = options.relaxation;
        let mut v = DVector::zeros(m);
        let mut x = DVector::zeros(m);
        let mut e = DVector::zeros(if ball.is_some() { rows } else { 0 });
        let mut z_prev_sum = DVector::<f64>::zeros(m);
        let mut trace = Vec::new();
        let mut avg = DVector::<f64>::zeros(m);
        let mut converged = false;
        let mut iterations = 0;
        let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);

        for it in 1..=options.max_iterations {
            iterations = it;
            // global update
            v.fill(0.0);
            for c in 0..ncopies {
                v[self.copy_pos[c]] += st.z[c] - st.u[c];
            }
            for p in 0..m {
                v[p] /= self.counts[p];
            }
            if ball.is_some() {
                let e_bar = DVector::from_iterator(rows, st.s.iter().zip(&st.us).map(|(s, u)| s - u));
                let (xn, en) = self.project(&v, Some(&e_bar));
                x = xn;
                e = en;
            } else {
                x = self.project(&v, None).0;
            }

            // local update
            let mut z_sum = DVector::<f64>::zeros(m);
            let mut rp_sq = 0.0;
            let mut gx_sq = 0.0;
            let mut z_sq = 0.0;
            for (j, &(a, b)) in self.group_ranges.iter().enumerate() {
                let mut buf: Vec<f64> = (a..b)
                    .map(|c| {
                        let xc = x[self.copy_pos[c]];
                        alpha * xc + (1.0 - alpha) * st.z[c] + st.u[c]
                    })
                    .collect();
                let thr = multipliers[j] / st.rho;
                shrink_in_place(&mut buf, thr, |i| self.copy_nonneg[a + i]);
                for (i, c) in (a..b).enumerate() {
                    let xc = x[self.copy_pos[c]];
                    let xr = alpha * xc + (1.0 - alpha) * st.z[c];
                    st.z[c] = buf[i];
                    st.u[c] += xr - buf[i];
                    z_sum[self.copy_pos[c]] += buf[i];
                    rp_sq += (xc - buf[i]).powi(2);
                    gx_sq += xc * xc;
                    z_sq += buf[i] * buf[i];
                }
            }
            let mut ds_sq = 0.0;
            if let Some(eps) = ball {
                let mut buf: Vec<f64> = (0..rows)
                    .map(|i| alpha * e[i] + (1.0 - alpha) * st.s[i] + st.us[i])
                    .collect();
                let nrm = buf.iter().map(|t| t * t).sum::<f64>().sqrt();
                if nrm > eps {
                    buf.iter_mut().for_each(|t| *t *= eps / nrm);
                }
                for i in 0..rows {
                    let er = alpha * e[i] + (1.0 - alpha) * st.s[i];
                    ds_sq += (buf[i] - st.s[i]).powi(2);
                    st.s[i] = buf[i];
                    st.us[i] += er - buf[i];
                    rp_sq += (e[i] - buf[i]).powi(2);
                    gx_sq += e[i] * e[i];
                    z_sq += buf[i] * buf[i];
                }
            }
            rp = rp_sq.sqrt();
            let dz = &z_sum - &z_prev_sum;
            rd = st.rho * (dz.norm_squared() + ds_sq).sqrt();
            z_prev_sum = z_sum;

            if !rp.is_finite() || !rd.is_finite() {
                return Err(ConicError::NumericalBreakdown { iteration: it });
            }

            let u_norm = st.rho
                * (st.u.iter().map(|t| t * t).sum::<f64>()
                    + st.us.iter().map(|t| t * t).sum::<f64>())
                .sqrt();
            let p_scale = 1.0 + gx_sq.sqrt().max(z_sq.sqrt());
            let d_scale = 1.0 + u_norm;

            if options.trace {
                avg += (&x - &avg) / it as f64;
                let obj = self.scaled_objective(&x, multipliers);
                let avg_obj = self.scaled_objective(&avg, multipliers);
                let affine = match ball {
                    None => (&self.scaled_a * &avg - &self.problem.r).norm(),
                    Some(eps) => ((&self.scaled_a * &avg - &self.problem.r).norm() - eps).max(0.0),
                };
                let sign: f64 = (0..ncopies)
                    .filter(|&c| self.copy_nonneg[c])
                    .map(|c| avg[self.copy_pos[c]].min(0.0).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let viol = affine + sign;
                trace.push(TraceRow {
                    iteration: it,
                    objective: obj,
                    primal_res: rp,
                    dual_res: rd,
                    averaged_merit: avg_obj + options.penalty * viol,
                });
            }

            if rp <= options.primal_tol * p_scale && rd <= options.dual_tol * d_scale && it > 1 {
                converged = true;
                break;
            }

            if options.adaptive_penalty && it % 10 == 0 {
                let rp_rel = rp / p_scale;
                let rd_rel = rd / d_scale;
                let factor = if rp_rel > 10.0 * rd_rel {
                    2.0
                } else if rd_rel > 10.0 * rp_rel {
                    0.5
                } else {
                    1.0
                };
                // Bounded so a stalled run cannot overflow the penalty.
                let bounded = (st.rho * factor).clamp(options.penalty * 1e-8, options.penalty * 1e8);
                let factor = bounded / st.rho;
                if factor != 1.0 {
                    st.rho *= factor;
                    st.u.iter_mut().for_each(|t| *t /= factor);
                    st.us.iter_mut().for_each(|t| *t /= factor);
                }
            }
        }

        // Zero every column covered by a group whose copy was shrunk to zero.
        let mut psi = x.clone();
        for (j, &(a, b)) in self.group_ranges.iter().enumerate() {
            if multipliers[j] > 0.0 && (a..b).all(|c| st.z[c] == 0.0) {
                for c in a..b {
                    psi[self.copy_pos[c]] = 0.0;
                }
            }
        }
        for c in 0..ncopies {
            if self.copy_nonneg[c] && psi[self.copy_pos[c]] < 0.0 {
                psi[self.copy_pos[c]] = 0.0;
            }
        }
        self.state = Some(st);

        let mut polished = false;
        if options.polish && ball.is_none() {
            if let Some(p) = self.polish(&psi, multipliers, options) {
                psi = p;
                polished = true;
            }
        }

        let mut phi = DVector::zeros(self.problem.a.ncols());
        for (p, &k) in self.free.iter().enumerate() {
            phi[k] = psi[p] / self.scale[p];
        }
        let objective = self.scaled_objective(&psi, multipliers);
        Ok(ConicSolution {
            phi,
            status: SolverStatus {
                converged,
                iterations,
                primal_residual: rp,
                dual_residual: rd,
                objective,
                polished,
            },
            trace,
        })
    }

    /// Least squares restricted to the support of `psi`; accepted only when
    /// feasible, sign-consistent and not worse in objective.
    fn polish(
        &self,
        psi: &DVector<f64>,
        multipliers: &[f64],
        options: &SolverOptions,
    ) -> Option<DVector<f64>> {
        let tol = 1e-9 * (1.0 + psi.amax());
        let support: Vec<usize> = (0..psi.len()).filter(|&p| psi[p].abs() > tol).collect();
        let r = &self.problem.r;
        let mut candidate = DVector::zeros(psi.len());
        if !support.is_empty() {
            let sub = select_columns(&self.scaled_a, &support);
            let (sol, _) = lstsq_min_norm(&sub, r);
            for (i, &p) in support.iter().enumerate() {
                candidate[p] = sol[i];
            }
        }
        let feas = (&self.scaled_a * &candidate - r).norm();
        if feas > options.primal_tol * (1.0 + r.norm()) {
            return None;
        }
        for c in 0..self.copy_pos.len() {
            if self.copy_nonneg[c] && candidate[self.copy_pos[c]] < -options.primal_tol {
                return None;
            }
        }
        let obj_new = self.scaled_objective(&candidate, multipliers);
        let obj_old = self.scaled_objective(psi, multipliers);
        if obj_new > obj_old + 1e-6 * (1.0 + obj_old) {
            return None;
        }
        for c in 0..self.copy_pos.len() {
            if self.copy_nonneg[c] && candidate[self.copy_pos[c]] < 0.0 {
                candidate[self.copy_pos[c]] = 0.0;
            }
        }
        Some(candidate)
    }
}

/// One-shot solve.
pub fn solve(problem: ConicProblem, options: &SolverOptions) -> Result<ConicSolution, ConicError> {
    ConicSolver::new(problem)?.solve(options)
}
