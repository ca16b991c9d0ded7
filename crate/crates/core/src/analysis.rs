//! Coherence-based recovery, uniqueness and stability certificates.
//!
//! Every check compares a left side built from the sparsity level with a
//! right side built from the mutual coherence `mu`. With `mu = 0` the right
//! sides are `+inf`. Strict inequalities are evaluated without slack.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::extract;
use crate::grouping::{GroupStructure, GroupingError, ZERO_COLUMN_RTOL};
use crate::poly::{monomial_count, monomials_of_degree, binomial, PolyError, PolynomialSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(
        "column {column} of A is zero; coherence is undefined. Either drop the monomial or \
         rerun with truncation allowed, which uses the reduced counts M~ and m~ (for pure \
         nonlinear systems x is then read from odd powers or bilinear signs)"
    )]
    ZeroColumn { column: usize },
    #[error("coherence needs at least two nonzero columns")]
    TooFewColumns,
    #[error("noise level must be finite and nonnegative, got {0}")]
    InvalidEpsilon(f64),
    #[error("sparsity level {k} exceeds n = {n}")]
    InvalidSparsity { k: usize, n: usize },
    #[error("phi has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Largest normalized inner product between two distinct columns.
///
/// Columns below the zero-column threshold are rejected.
pub fn mutual_coherence(a: &DMatrix<f64>) -> Result<f64, AnalysisError> {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    if let Some(column) = norms.iter().position(|&w| !(w > ZERO_COLUMN_RTOL * max)) {
        return Err(AnalysisError::ZeroColumn { column });
    }
    coherence_of(a, &(0..a.ncols()).collect::<Vec<_>>())
}

/// Coherence restricted to the listed columns.
pub fn coherence_of(a: &DMatrix<f64>, cols: &[usize]) -> Result<f64, AnalysisError> {
    if cols.len() < 2 {
        return Err(AnalysisError::TooFewColumns);
    }
    let normalized: Vec<DVector<f64>> = cols
        .iter()
        .map(|&k| {
            let c = a.column(k);
            c / c.norm()
        })
        .collect();
    let mut mu = 0.0f64;
    for i in 0..normalized.len() {
        for j in i + 1..normalized.len() {
            mu = mu.max(normalized[i].dot(&normalized[j]).abs());
        }
    }
    Ok(mu.min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CheckName {
    Thm1,
    Thm3,
    Cor1,
    Thm4,
    Thm7,
    Thm8,
    Prop2Applicable,
    Thm5Noise,
    Thm6Noise,
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl Check {
    fn strict(lhs: f64, rhs: f64) -> Self {
        Check { holds: lhs < rhs, lhs, rhs }
    }
    fn weak(lhs: f64, rhs: f64) -> Self {
        Check { holds: lhs <= rhs, lhs, rhs }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityBounds {
    /// Bound on `||x_hat - x0||^2` for the l1 program, when its condition holds.
    pub l1_bound: Option<f64>,
    /// Bound on `||W_x (x_hat - x0)||^2` for the group program.
    pub group_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryCertificate {
    pub mu: f64,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    /// Group size (largest truncated group when `truncated`).
    pub m: usize,
    #[serde(rename = "M")]
    pub big_m: usize,
    /// Zero columns were removed and reduced counts substituted.
    pub truncated: bool,
    pub checks: BTreeMap<CheckName, Check>,
    pub stability_bounds: Option<StabilityBounds>,
}

/// `1 + 1/mu`, infinite at `mu = 0`.
fn inv1(mu: f64) -> f64 {
    if mu == 0.0 {
        f64::INFINITY
    } else {
        1.0 + 1.0 / mu
    }
}

/// `sqrt(1 + 1/mu^2)`, infinite at `mu = 0`.
fn inv2(mu: f64) -> f64 {
    if mu == 0.0 {
        f64::INFINITY
    } else {
        (1.0 + 1.0 / (mu * mu)).sqrt()
    }
}

/// Right side of the group-sparsity condition, `sqrt(1 + 1/mu^2) / (2 sqrt(m))`.
pub fn group_condition_rhs(mu: f64, m: usize) -> f64 {
    inv2(mu) / (2.0 * (m as f64).sqrt())
}

/// Number of nonzero entries of `lift(x)` when `x` has `k` nonzeros.
pub fn lifted_support_size(k: usize, d: usize) -> u64 {
    (1..=d)
        .map(|q| monomials_of_degree(k, q).unwrap_or(u64::MAX))
        .fold(0u64, |a, b| a.saturating_add(b))
}

/// Evaluate every a priori condition from scalar parameters.
pub fn certify_params(
    mu: f64,
    n: usize,
    d: usize,
    k: usize,
    big_m: usize,
    m: usize,
    epsilon: f64,
) -> RecoveryCertificate {
    let (nf, mf, kf, df) = (n as f64, big_m as f64, k as f64, d as f64);
    let mut checks = BTreeMap::new();
    checks.insert(CheckName::Thm1, Check::strict(kf, nf / (2.0 * mf) * inv1(mu)));
    let group = Check::strict(kf, group_condition_rhs(mu, m));
    checks.insert(CheckName::Thm3, group);
    checks.insert(CheckName::Cor1, group);
    checks.insert(
        CheckName::Thm7,
        Check::weak(lifted_support_size(k, d) as f64, 0.5 * inv1(mu)),
    );
    let top = binomial((k + d).saturating_sub(1) as u64, d as u64).unwrap_or(u64::MAX);
    checks.insert(CheckName::Thm8, Check::weak(top as f64, inv1(mu) / (2.0 * df)));
    let prop2_rhs = (d * (k + d)) as f64;
    checks.insert(
        CheckName::Prop2Applicable,
        Check {
            holds: d >= 3 && nf >= prop2_rhs,
            lhs: nf,
            rhs: prop2_rhs,
        },
    );
    let t5 = Check::strict(kf, nf / (4.0 * mf) * inv1(mu));
    let t6 = Check::strict(kf, inv1(mu) / (4.0 * nf * mf));
    checks.insert(CheckName::Thm5Noise, t5);
    checks.insert(CheckName::Thm6Noise, t6);
    let e2 = epsilon * epsilon;
    let bounds = StabilityBounds {
        l1_bound: t5
            .holds
            .then(|| 4.0 * e2 / (1.0 - mu * (4.0 * mf * kf / nf - 1.0))),
        group_bound: t6
            .holds
            .then(|| 4.0 * nf * e2 / (1.0 - mu * (4.0 * nf * mf * kf - 1.0))),
    };
    RecoveryCertificate {
        mu,
        n,
        d,
        k,
        epsilon,
        m,
        big_m,
        truncated: false,
        checks,
        stability_bounds: (bounds.l1_bound.is_some() || bounds.group_bound.is_some())
            .then_some(bounds),
    }
}

/// Coherence and reduced counts for a system.
struct Coherence {
    mu: f64,
    big_m: usize,
    m: usize,
    truncated: bool,
}

fn system_coherence(system: &PolynomialSystem, allow_truncation: bool) -> Result<Coherence, AnalysisError> {
    let groups = GroupStructure::build(system.basis(), system.a())?;
    if groups.has_truncation() {
        if !allow_truncation {
            let column = (0..system.basis().len())
                .find(|&k| !groups.is_active(k))
                .expect("truncation implies an inactive column");
            return Err(AnalysisError::ZeroColumn { column });
        }
        let mu = coherence_of(system.a(), groups.active_columns())?;
        return Ok(Coherence {
            mu,
            big_m: groups.active_columns().len(),
            m: groups.max_group_size(),
            truncated: true,
        });
    }
    Ok(Coherence {
        mu: coherence_of(system.a(), groups.active_columns())?,
        big_m: monomial_count(system.n(), system.basis().d())?,
        m: groups.max_group_size(),
        truncated: false,
    })
}

pub fn certify(
    system: &PolynomialSystem,
    k: usize,
    epsilon: f64,
    allow_truncation: bool,
) -> Result<RecoveryCertificate, AnalysisError> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(AnalysisError::InvalidEpsilon(epsilon));
    }
    if k > system.n() {
        return Err(AnalysisError::InvalidSparsity { k, n: system.n() });
    }
    let c = system_coherence(system, allow_truncation)?;
    let mut cert = certify_params(c.mu, system.n(), system.basis().d(), k, c.big_m, c.m, epsilon);
    cert.truncated = c.truncated;
    Ok(cert)
}

/// Conclusions drawn from an estimate alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PosterioriCertificate {
    pub mu: f64,
    pub m: usize,
    pub group_support: usize,
    pub check: Check,
    pub truncated: bool,
    /// `x_hat` satisfies the polynomial equations.
    pub verified: bool,
    /// `phi_hat` is the unique minimizer of the group l0 and l1/l2 programs.
    pub unique_group_solution: bool,
    /// `x_hat` is additionally the unique sparsest solution of the system.
    pub unique_sparsest: bool,
}

pub fn certify_posteriori(
    system: &PolynomialSystem,
    phi_hat: &DVector<f64>,
    allow_truncation: bool,
) -> Result<PosterioriCertificate, AnalysisError> {
    let basis = system.basis();
    if phi_hat.len() != basis.len() {
        return Err(AnalysisError::DimensionMismatch {
            expected: basis.len(),
            got: phi_hat.len(),
        });
    }
    let c = system_coherence(system, allow_truncation)?;
    let groups = GroupStructure::build(basis, system.a())?;
    let support = groups.support(phi_hat, extract::zero_tolerance(phi_hat)).len();
    let check = Check::strict(support as f64, group_condition_rhs(c.mu, c.m));
    let x_hat = basis.unlift(phi_hat.as_slice())?;
    let verified = match extract::extract(basis, &groups, phi_hat, system) {
        Ok(rep) => extract::verify(system, &rep.x_hat, crate::bp::VERIFY_RTOL).0,
        Err(_) => extract::verify(system, x_hat.as_slice(), crate::bp::VERIFY_RTOL).0,
    };
    Ok(PosterioriCertificate {
        mu: c.mu,
        m: c.m,
        group_support: support,
        check,
        truncated: c.truncated,
        verified,
        unique_group_solution: check.holds,
        unique_sparsest: check.holds && verified,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SparsityBounds {
    /// `k / n`.
    pub prop1_rhs: f64,
    /// `||lift(x)||_0` for a generic `x` with `k` nonzeros.
    pub exact_lifted: u64,
    /// `exact_lifted / M`.
    pub exact_ratio: f64,
    /// `2k / (d n)` when `d >= 3` and `n >= d (k + d)`.
    pub prop2_rhs: Option<f64>,
}

pub fn sparsity_ratio_bounds(n: usize, d: usize, k: usize) -> Result<SparsityBounds, AnalysisError> {
    if k > n {
        return Err(AnalysisError::InvalidSparsity { k, n });
    }
    let big_m = monomial_count(n, d)? as f64;
    let exact = lifted_support_size(k, d);
    let applicable = d >= 3 && n >= d * (k + d);
    Ok(SparsityBounds {
        prop1_rhs: k as f64 / n as f64,
        exact_lifted: exact,
        exact_ratio: exact as f64 / big_m,
        prop2_rhs: applicable.then(|| 2.0 * k as f64 / (d as f64 * n as f64)),
    })
}

/// `(lhs, rhs)` of `(1/a) C(a+c-1, c) >= (1/b) C(b+c-1, c)` for `a >= b >= 1`.
pub fn lemma1_sides(a: u64, b: u64, c: u64) -> Option<(f64, f64)> {
    let l = binomial(a + c - 1, c)? as f64 / a as f64;
    let r = binomial(b + c - 1, c)? as f64 / b as f64;
    Some((l, r))
}

/// `(lhs, rhs)` of `(1/a) sum_{q=2}^d C(a+q-1, q) >= (d/b) sum_{q=2}^d C(b+q-1, q)`
/// for `a >= d (b + d)`.
pub fn lemma3_sides(a: u64, b: u64, d: u64) -> Option<(f64, f64)> {
    let mut sa = 0u64;
    let mut sb = 0u64;
    for q in 2..=d {
        sa = sa.checked_add(binomial(a + q - 1, q)?)?;
        sb = sb.checked_add(binomial(b + q - 1, q)?)?;
    }
    Some((sa as f64 / a as f64, d as f64 * sb as f64 / b as f64))
}

impl fmt::Display for RecoveryCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "mutual coherence mu = {:.6}   n = {}  d = {}  M = {}  m = {}  k = {}  eps = {}",
            self.mu, self.n, self.d, self.big_m, self.m, self.k, self.epsilon
        )?;
        if self.truncated {
            writeln!(f, "(zero columns removed; M and m are the reduced counts)")?;
        }
        for (name, c) in &self.checks {
            let mark = if c.holds { "holds" } else { "fails" };
            writeln!(f, "  {:<16} {:>5}   lhs = {:<12.6} rhs = {:.6}", name.to_string(), mark, c.lhs, c.rhs)?;
        }
        if let Some(b) = &self.stability_bounds {
            if let Some(v) = b.l1_bound {
                writeln!(f, "  l1 stability:    ||x_hat - x0||^2 <= {v:.6}")?;
            }
            if let Some(v) = b.group_bound {
                writeln!(f, "  group stability: ||W_x (x_hat - x0)||^2 <= {v:.6}")?;
            }
        }
        write!(
            f,
            "Recovery conclusions assume x0 is a (unique, for Thm1/Thm7/Thm8) sparsest solution."
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MonomialBasis;
    use approx::assert_relative_eq;

    #[test]
    fn coherence_examples() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_relative_eq!(mutual_coherence(&a).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(mutual_coherence(&id).unwrap(), 0.0);
        let dup = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 6.0]);
        assert_relative_eq!(mutual_coherence(&dup).unwrap(), 1.0, epsilon = 1e-15);
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert_eq!(mutual_coherence(&z), Err(AnalysisError::ZeroColumn { column: 1 }));
        assert_eq!(
            mutual_coherence(&DMatrix::from_element(2, 1, 1.0)),
            Err(AnalysisError::TooFewColumns)
        );
    }

    #[test]
    fn thm1_arithmetic() {
        let c = certify_params(0.2, 2, 2, 1, 5, 3, 0.0);
        let t = c.checks[&CheckName::Thm1];
        assert_relative_eq!(t.rhs, 1.2, epsilon = 1e-12);
        assert!(t.holds);
    }

    #[test]
    fn thm5_bound_arithmetic() {
        let c = certify_params(0.01, 2, 2, 1, 5, 3, 0.1);
        let b = c.stability_bounds.unwrap().l1_bound.unwrap();
        assert_relative_eq!(b, 0.04 / 0.91, epsilon = 1e-12);
        assert!((b - 0.043956).abs() < 1e-6);
    }

    #[test]
    fn zero_coherence_means_every_condition_holds() {
        let c = certify_params(0.0, 3, 2, 3, 9, 4, 1.0);
        for name in [
            CheckName::Thm1,
            CheckName::Thm3,
            CheckName::Cor1,
            CheckName::Thm7,
            CheckName::Thm8,
            CheckName::Thm5Noise,
            CheckName::Thm6Noise,
        ] {
            assert!(c.checks[&name].holds, "{name}");
            assert!(c.checks[&name].rhs.is_infinite());
        }
        let b = c.stability_bounds.unwrap();
        assert_eq!(b.l1_bound, Some(4.0));
        assert_eq!(b.group_bound, Some(12.0));
    }

    #[test]
    fn strict_inequality_has_no_slack() {
        // rhs = n/(2M) (1 + 1/mu) = 1 exactly with n = 2, M = 4, mu = 1/3
        let c = certify_params(1.0 / 3.0, 2, 1, 1, 4, 1, 0.0);
        let t = c.checks[&CheckName::Thm1];
        assert!((t.rhs - 1.0).abs() < 1e-15);
        assert_eq!(t.holds, t.lhs < t.rhs);
    }

    #[test]
    fn certify_orthogonal_system() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let a = DMatrix::<f64>::identity(5, 5);
        let sys = PolynomialSystem::new(basis, a, DVector::zeros(5), DVector::zeros(5)).unwrap();
        let c = certify(&sys, 2, 0.0, false).unwrap();
        assert_eq!(c.mu, 0.0);
        assert_eq!((c.big_m, c.m), (5, 3));
        assert!(c.checks.values().filter(|c| c.rhs.is_infinite()).all(|c| c.holds));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"Thm1\"") && json.contains("\"M\":5"));
        assert!(c.to_string().contains("Thm3"));
    }

    #[test]
    fn truncation_requires_opt_in() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let mut a = DMatrix::<f64>::identity(5, 5);
        a.column_mut(0).fill(0.0);
        let sys = PolynomialSystem::new(basis, a, DVector::zeros(5), DVector::zeros(5)).unwrap();
        assert_eq!(certify(&sys, 1, 0.0, false), Err(AnalysisError::ZeroColumn { column: 0 }));
        let c = certify(&sys, 1, 0.0, true).unwrap();
        assert!(c.truncated);
        assert_eq!((c.big_m, c.m), (4, 3));
    }

    #[test]
    fn posteriori_zero_and_dense() {
        let basis = MonomialBasis::new(3, 2).unwrap();
        let mut g = crate::rng::GaussianStream::new(3, 0);
        let a = g.matrix(6, basis.len());
        let sys = PolynomialSystem::new(basis.clone(), a, DVector::zeros(6), DVector::zeros(6)).unwrap();
        let p = certify_posteriori(&sys, &DVector::zeros(9), false).unwrap();
        assert_eq!(p.group_support, 0);
        assert!(p.check.holds && p.verified && p.unique_sparsest);
        let dense = basis.lift(&[1.0, 1.0, 1.0]).unwrap();
        let p = certify_posteriori(&sys, &dense, false).unwrap();
        assert_eq!(p.group_support, 3);
        assert!(!p.check.holds);
    }

    #[test]
    fn sparsity_bounds_examples() {
        let s = sparsity_ratio_bounds(2, 2, 1).unwrap();
        assert_eq!(s.exact_lifted, 2);
        assert!(s.exact_ratio <= s.prop1_rhs);
        assert!(s.prop2_rhs.is_none());
        assert_eq!(sparsity_ratio_bounds(4, 3, 0).unwrap().exact_lifted, 0);
        let s = sparsity_ratio_bounds(12, 3, 1).unwrap();
        assert_eq!(s.prop2_rhs, Some(2.0 / 36.0));
        assert!(s.exact_ratio <= s.prop2_rhs.unwrap());
    }

    #[test]
    fn lemma_sides_examples() {
        let (l, r) = lemma1_sides(3, 2, 2).unwrap();
        assert_relative_eq!(l, 2.0);
        assert_relative_eq!(r, 1.5);
        let (l, r) = lemma3_sides(12, 1, 3).unwrap();
        assert!(l >= r);
    }
}
