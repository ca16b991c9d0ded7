//! Shared fixtures for the criterion benches.

use polysparse::experiment::{generate_instance, ExperimentSpec, Instance};

/// Random instance with Gaussian coefficients and a `k`-sparse planted solution.
pub fn instance(n: usize, d: usize, n_eq: usize, k: usize, seed: u64) -> Instance {
    let spec = ExperimentSpec {
        n,
        d,
        n_eq,
        k,
        seed,
        trials: 1,
        ..ExperimentSpec::default()
    };
    generate_instance(&spec, 0).expect("valid bench instance")
}
