//! Variable groups over the lifted vector.
//!
//! Group `j` collects the monomials that involve `x_j`. Columns of `A` that
//! are numerically zero carry no information and are removed from every
//! group; the remaining columns are the *active* ones.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::poly::MonomialBasis;

/// Relative threshold below which a column norm counts as zero.
pub const ZERO_COLUMN_RTOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum GroupingError {
    #[error("coefficient matrix has {got} columns, basis has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coefficient matrix is identically zero")]
    ZeroMatrix,
}

#[derive(Clone, Debug)]
pub struct GroupStructure {
    full_sets: Vec<Vec<usize>>,
    sets: Vec<Vec<usize>>,
    weights: DVector<f64>,
    active: Vec<usize>,
    even: Vec<usize>,
}

impl GroupStructure {
    pub fn build(basis: &MonomialBasis, a: &DMatrix<f64>) -> Result<Self, GroupingError> {
        if a.ncols() != basis.len() {
            return Err(GroupingError::DimensionMismatch {
                expected: basis.len(),
                got: a.ncols(),
            });
        }
        let weights = DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.norm()));
        let max = weights.max();
        if max <= 0.0 {
            return Err(GroupingError::ZeroMatrix);
        }
        let cutoff = ZERO_COLUMN_RTOL * max;
        let mut weights = weights;
        let mut active = Vec::with_capacity(weights.len());
        for (k, w) in weights.iter_mut().enumerate() {
            if *w > cutoff {
                active.push(k);
            } else {
                *w = 0.0;
            }
        }
        let full_sets = index_sets(basis);
        let sets = full_sets
            .iter()
            .map(|set| set.iter().copied().filter(|&k| weights[k] > 0.0).collect())
            .collect();
        Ok(GroupStructure {
            full_sets,
            sets,
            weights,
            active,
            even: even_degree_indices(basis),
        })
    }

    pub fn n_groups(&self) -> usize {
        self.sets.len()
    }

    /// Index sets restricted to active columns.
    pub fn index_sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn group(&self, j: usize) -> &[usize] {
        &self.sets[j]
    }

    /// Index sets before removal of zero columns.
    pub fn full_index_sets(&self) -> &[Vec<usize>] {
        &self.full_sets
    }

    /// Column norms `w_k`; zero for inactive columns.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn active_columns(&self) -> &[usize] {
        &self.active
    }

    pub fn is_active(&self, k: usize) -> bool {
        self.weights[k] > 0.0
    }

    pub fn has_truncation(&self) -> bool {
        self.active.len() < self.weights.len()
    }

    /// Columns whose monomial has only even exponents.
    pub fn even_set(&self) -> &[usize] {
        &self.even
    }

    /// Largest truncated group size.
    pub fn max_group_size(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `||W_j phi||_2` for every group.
    pub fn group_norms(&self, phi: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.sets.len(),
            self.sets.iter().map(|set| {
                set.iter()
                    .map(|&k| (self.weights[k] * phi[k]).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }),
        )
    }

    /// Groups whose weighted norm exceeds `tol`.
    pub fn support(&self, phi: &DVector<f64>, tol: f64) -> Vec<usize> {
        self.group_norms(phi)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > tol)
            .map(|(j, _)| j)
            .collect()
    }
}

/// `I_j = { k : (alpha_k)_j != 0 }` over the full basis.
pub fn index_sets(basis: &MonomialBasis) -> Vec<Vec<usize>> {
    let mut sets = vec![Vec::new(); basis.n()];
    for (k, alpha) in basis.indexes().iter().enumerate() {
        for (j, &a) in alpha.exponents().iter().enumerate() {
            if a != 0 {
                sets[j].push(k);
            }
        }
    }
    sets
}

pub fn even_degree_indices(basis: &MonomialBasis) -> Vec<usize> {
    basis
        .indexes()
        .iter()
        .enumerate()
        .filter(|(_, alpha)| alpha.is_all_even())
        .map(|(k, _)| k)
        .collect()
}
