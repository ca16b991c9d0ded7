//! Greedy support search over variables.
//!
//! A variable support `S` selects every monomial built only from variables in
//! `S`; each candidate is scored by the least-squares residual on those
//! columns. `ega` enumerates supports by cardinality, `aga` grows one.

use itertools::Itertools;
use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::extract::{self, ExtractError};
use crate::grouping::{GroupStructure, GroupingError};
use crate::linalg::{lstsq_min_norm, select_columns};
use crate::poly::{MonomialBasis, PolynomialSystem};

/// Maximum number of least-squares solves in one `ega` call.
pub const LS_BUDGET: u64 = 1_000_000;
/// Floor on the squared-residual threshold, relative to `(1 + ||y - b||)^2`.
/// Keeps `epsilon = 0` meaningful in floating point.
pub const EXACT_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct GreedyConfig {
    /// Threshold on the squared residual `||A phi + b - y||^2`.
    pub epsilon: f64,
    /// Largest support size to try; `None` means `n`.
    pub max_support: Option<usize>,
    /// Finish the first successful cardinality and report every solution.
    pub enumerate_all: bool,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            epsilon: 0.0,
            max_support: None,
            enumerate_all: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum GreedyError {
    #[error("epsilon must be finite or +inf and nonnegative, got {0}")]
    InvalidEpsilon(f64),
    #[error("least-squares budget of {budget} solves exhausted at cardinality {cardinality}")]
    BudgetExceeded { budget: u64, cardinality: usize },
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportSolution {
    pub support: Vec<usize>,
    pub residual_sq: f64,
}

#[derive(Clone, Debug)]
pub struct GreedyResult {
    pub x_hat: DVector<f64>,
    pub phi_hat: DVector<f64>,
    pub support: Vec<usize>,
    pub residual_sq: f64,
    pub ls_solves: u64,
    /// No support up to `max_support` met the threshold.
    pub infeasible: bool,
    pub all_solutions: Option<Vec<SupportSolution>>,
    /// Best squared residual after each AGA iteration.
    pub residual_history: Vec<f64>,
}

/// Columns whose multi-index only involves variables in `var_support`.
pub fn support_columns(basis: &MonomialBasis, var_support: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; basis.n()];
    for &j in var_support {
        inside[j] = true;
    }
    basis
        .indexes()
        .iter()
        .enumerate()
        .filter(|(_, alpha)| {
            alpha
                .exponents()
                .iter()
                .enumerate()
                .all(|(j, &e)| e == 0 || inside[j])
        })
        .map(|(k, _)| k)
        .collect()
}

pub fn least_squares_min_norm(
    a_s: &nalgebra::DMatrix<f64>,
    rhs: &DVector<f64>,
) -> (DVector<f64>, f64) {
    lstsq_min_norm(a_s, rhs)
}

/// Threshold actually compared against the squared residual.
pub fn effective_threshold(epsilon: f64, rhs: &DVector<f64>) -> f64 {
    epsilon.max((EXACT_RTOL * (1.0 + rhs.norm())).powi(2))
}

struct Fit {
    phi: DVector<f64>,
    residual_sq: f64,
}

struct Search<'a> {
    system: &'a PolynomialSystem,
    rhs: DVector<f64>,
    ls_solves: u64,
}

impl<'a> Search<'a> {
    fn new(system: &'a PolynomialSystem) -> Self {
        Search {
            system,
            rhs: system.rhs(),
            ls_solves: 0,
        }
    }

    fn fit(&mut self, var_support: &[usize]) -> Fit {
        self.ls_solves += 1;
        let cols = support_columns(self.system.basis(), var_support);
        let (sub, residual_sq) = lstsq_min_norm(&select_columns(self.system.a(), &cols), &self.rhs);
        let mut phi = DVector::zeros(self.system.basis().len());
        for (p, &k) in cols.iter().enumerate() {
            phi[k] = sub[p];
        }
        Fit { phi, residual_sq }
    }

    fn finish(
        &self,
        support: Vec<usize>,
        fit: Fit,
        infeasible: bool,
        all_solutions: Option<Vec<SupportSolution>>,
        residual_history: Vec<f64>,
    ) -> Result<GreedyResult, GreedyError> {
        let basis = self.system.basis();
        let groups = GroupStructure::build(basis, self.system.a())?;
        let report = extract::extract(basis, &groups, &fit.phi, self.system)?;
        // The readout must stay on the chosen support.
        let mut x = DVector::from_vec(report.x_hat);
        for j in 0..x.len() {
            if !support.contains(&j) {
                x[j] = 0.0;
            }
        }
        Ok(GreedyResult {
            x_hat: x,
            phi_hat: fit.phi,
            support,
            residual_sq: fit.residual_sq,
            ls_solves: self.ls_solves,
            infeasible,
            all_solutions,
            residual_history,
        })
    }
}

fn check_epsilon(eps: f64) -> Result<(), GreedyError> {
    if eps >= 0.0 {
        Ok(())
    } else {
        Err(GreedyError::InvalidEpsilon(eps))
    }
}

/// Exact search: smallest cardinality first, lexicographic within a level.
pub fn ega(system: &PolynomialSystem, config: &GreedyConfig) -> Result<GreedyResult, GreedyError> {
    check_epsilon(config.epsilon)?;
    let n = system.n();
    let max_support = config.max_support.unwrap_or(n).min(n);
    let mut search = Search::new(system);
    let threshold = effective_threshold(config.epsilon, &search.rhs);
    let zero_fit = Fit {
        phi: DVector::zeros(system.basis().len()),
        residual_sq: search.rhs.norm_squared(),
    };
    if zero_fit.residual_sq <= threshold {
        let all = config.enumerate_all.then(|| {
            vec![SupportSolution {
                support: Vec::new(),
                residual_sq: zero_fit.residual_sq,
            }]
        });
        return search.finish(Vec::new(), zero_fit, false, all, Vec::new());
    }
    for card in 1..=max_support {
        let mut first: Option<(Vec<usize>, Fit)> = None;
        let mut all = Vec::new();
        for combo in (0..n).combinations(card) {
            if search.ls_solves >= LS_BUDGET {
                return Err(GreedyError::BudgetExceeded {
                    budget: LS_BUDGET,
                    cardinality: card,
                });
            }
            let fit = search.fit(&combo);
            if fit.residual_sq <= threshold {
                if config.enumerate_all {
                    all.push(SupportSolution {
                        support: combo.clone(),
                        residual_sq: fit.residual_sq,
                    });
                }
                if first.is_none() {
                    first = Some((combo, fit));
                    if !config.enumerate_all {
                        break;
                    }
                }
            }
        }
        if let Some((support, fit)) = first {
            let all = config.enumerate_all.then_some(all);
            return search.finish(support, fit, false, all, Vec::new());
        }
    }
    search.finish(Vec::new(), zero_fit, true, config.enumerate_all.then(Vec::new), Vec::new())
}

/// Forward selection: add the variable that most reduces the residual.
pub fn aga(system: &PolynomialSystem, config: &GreedyConfig) -> Result<GreedyResult, GreedyError> {
    check_epsilon(config.epsilon)?;
    let n = system.n();
    let max_support = config.max_support.unwrap_or(n).min(n);
    let mut search = Search::new(system);
    let threshold = effective_threshold(config.epsilon, &search.rhs);
    let mut best = Fit {
        phi: DVector::zeros(system.basis().len()),
        residual_sq: search.rhs.norm_squared(),
    };
    let mut support: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    while best.residual_sq > threshold && support.len() < max_support {
        let mut round: Option<(usize, Fit)> = None;
        for j in (0..n).filter(|j| !support.contains(j)) {
            let mut trial = support.clone();
            trial.push(j);
            trial.sort_unstable();
            let fit = search.fit(&trial);
            let better = match &round {
                None => true,
                Some((_, f)) => fit.residual_sq < f.residual_sq,
            };
            if better {
                round = Some((j, fit));
            }
        }
        let (j, fit) = round.expect("some variable remains");
        support.push(j);
        support.sort_unstable();
        history.push(fit.residual_sq);
        best = fit;
    }
    let infeasible = best.residual_sq > threshold;
    search.finish(support, best, infeasible, None, history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianStream;
    use nalgebra::DMatrix;

    fn random_system(n: usize, d: usize, rows: usize, x0: &[f64], seed: u64) -> PolynomialSystem {
        let basis = MonomialBasis::new(n, d).unwrap();
        let mut g = GaussianStream::new(seed, 0);
        let a = g.matrix(rows, basis.len());
        let b = g.vector(rows);
        let y = &a * basis.lift(x0).unwrap() + &b;
        PolynomialSystem::new(basis, a, b, y).unwrap()
    }

    #[test]
    fn support_columns_examples() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        assert_eq!(support_columns(&basis, &[0]), vec![0, 2]);
        assert_eq!(support_columns(&basis, &[0, 1]), (0..5).collect::<Vec<_>>());
        assert!(support_columns(&basis, &[]).is_empty());
    }

    #[test]
    fn least_squares_examples() {
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let (x, r) = least_squares_min_norm(&a, &DVector::from_vec(vec![1.0, 3.0]));
        assert!((x[0] - 2.0).abs() < 1e-14 && (r - 2.0).abs() < 1e-12);
    }

    /// x1 + x1^2 = 2 and x2 + x1 x2 = 0 with x0 = (1, 0).
    fn two_variable_instance() -> PolynomialSystem {
        let basis = MonomialBasis::new(2, 2).unwrap();
        // columns: x1, x2, x1^2, x1x2, x2^2
        let a = DMatrix::from_row_slice(2, 5, &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        PolynomialSystem::new(basis, a, DVector::zeros(2), DVector::from_vec(vec![2.0, 0.0])).unwrap()
    }

    #[test]
    fn ega_two_variable_instance() {
        let sys = two_variable_instance();
        let res = ega(&sys, &GreedyConfig::default()).unwrap();
        assert_eq!(res.support, vec![0]);
        assert!(res.residual_sq < 1e-20);
        assert!(!res.infeasible);
        // min-norm on {x1, x1^2} splits 2 evenly, so x_hat = 1
        assert!((res.x_hat[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aga_two_variable_instance() {
        let sys = two_variable_instance();
        let res = aga(&sys, &GreedyConfig::default()).unwrap();
        assert_eq!(res.support, vec![0]);
        assert_eq!(res.ls_solves, 2);
        assert!(res.residual_sq < 1e-20);
    }

    #[test]
    fn zero_rhs_short_circuits() {
        let basis = MonomialBasis::new(3, 2).unwrap();
        let a = GaussianStream::new(2, 0).matrix(4, basis.len());
        let sys = PolynomialSystem::new(basis, a, DVector::zeros(4), DVector::zeros(4)).unwrap();
        let res = ega(&sys, &GreedyConfig::default()).unwrap();
        assert!(res.support.is_empty() && res.ls_solves == 0);
        assert_eq!(res.x_hat.norm(), 0.0);
    }

    #[test]
    fn infinite_epsilon_gives_empty_support() {
        let sys = random_system(4, 2, 6, &[1.0, 0.0, 0.0, 0.0], 3);
        let cfg = GreedyConfig {
            epsilon: f64::INFINITY,
            ..Default::default()
        };
        let res = aga(&sys, &cfg).unwrap();
        assert!(res.support.is_empty());
        assert_eq!(res.x_hat.norm(), 0.0);
    }

    #[test]
    fn ega_recovers_random_instance() {
        let x0 = [0.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let sys = random_system(6, 2, 12, &x0, 9);
        let res = ega(&sys, &GreedyConfig::default()).unwrap();
        assert_eq!(res.support, vec![1, 4]);
        assert!((&res.x_hat - DVector::from_row_slice(&x0)).norm() < 1e-9);
        // 6 singletons, 5 pairs starting at 0, then (1,2), (1,3), (1,4)
        assert_eq!(res.ls_solves, 6 + 5 + 3);
    }

    #[test]
    fn aga_solve_count_and_monotone_residual() {
        let x0 = [1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let sys = random_system(7, 2, 30, &x0, 4);
        let res = aga(&sys, &GreedyConfig::default()).unwrap();
        let s = res.support.len() as u64;
        let expected: u64 = (1..=s).map(|t| 7 - t + 1).sum();
        assert_eq!(res.ls_solves, expected);
        assert!(res.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn infeasible_system_is_flagged() {
        let basis = MonomialBasis::new(2, 1).unwrap();
        // x1 = 1 and x1 = 2 cannot both hold
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let sys =
            PolynomialSystem::new(basis, a, DVector::zeros(2), DVector::from_vec(vec![1.0, 2.0]))
                .unwrap();
        let res = ega(&sys, &GreedyConfig::default()).unwrap();
        assert!(res.infeasible);
        let res = aga(&sys, &GreedyConfig::default()).unwrap();
        assert!(res.infeasible);
        assert!(matches!(
            ega(&sys, &GreedyConfig { epsilon: -1.0, ..Default::default() }),
            Err(GreedyError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn enumerate_all_lists_every_minimal_support() {
        let basis = MonomialBasis::new(3, 1).unwrap();
        // x1 = 1 or x2 = 1 or x3 = 1 satisfy the single equation
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let sys =
            PolynomialSystem::new(basis, a, DVector::zeros(1), DVector::from_vec(vec![1.0])).unwrap();
        let cfg = GreedyConfig {
            enumerate_all: true,
            ..Default::default()
        };
        let res = ega(&sys, &cfg).unwrap();
        let sols: Vec<_> = res.all_solutions.unwrap().into_iter().map(|s| s.support).collect();
        assert_eq!(sols, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(res.support, vec![0]);
    }
}
