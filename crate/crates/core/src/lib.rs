//! Sparse solutions of systems of polynomial equations.
//!
//! Polynomial equations are lifted to linear equations over all monomials of
//! degree `1..=d`; sparsity of the base variables becomes group sparsity of the
//! lifted vector. The crate provides convex (l1 and group l1/l2 with
//! reweighting) and greedy solvers, value extraction, coherence certificates
//! and a Monte Carlo harness.
pub mod analysis;
pub mod bp;
pub mod conic;
pub mod experiment;
pub mod extract;
pub mod greedy;
pub mod grouping;
pub mod linalg;
pub mod poly;
pub mod rng;

pub use analysis::{certify, certify_posteriori, mutual_coherence, RecoveryCertificate};
pub use bp::{BpConfig, BpError, BpMethod, SolveResult};
pub use conic::{ConicProblem, ConicSolver, Constraint, SolverOptions, SolverStatus};
pub use experiment::{ExperimentSpec, Method, SummaryRow, TrialRecord};
pub use extract::{ExtractionMethod, ExtractionReport};
pub use greedy::{GreedyConfig, GreedyResult};
pub use grouping::GroupStructure;
pub use poly::{MonomialBasis, MultiIndex, PolyError, PolynomialSystem};
