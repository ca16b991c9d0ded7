//! Monomial bases, the lifting map and polynomial systems.
//!
//! A polynomial of degree at most `d` in `n` variables with no constant term
//! is a linear form over the vector of all monomials of degree `1..=d`. The
//! [`MonomialBasis`] fixes the order of those monomials; every column index
//! used elsewhere in the crate refers to this order.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Clone)]
pub enum PolyError {
    #[error("number of variables must be positive")]
    ZeroVariables,
    #[error("degree must be positive")]
    ZeroDegree,
    #[error("monomial count overflows for n={n}, d={d}")]
    Overflow { n: usize, d: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("equation {equation}: exponent vector has {got} entries, expected {expected}")]
    AlphaLength {
        equation: usize,
        expected: usize,
        got: usize,
    },
    #[error("equation {equation}: monomial degree {degree} outside [1, {max}]")]
    AlphaDegree {
        equation: usize,
        degree: usize,
        max: usize,
    },
    #[error("malformed system file: {0}")]
    Json(String),
}

/// Exponent vector of a monomial `x_1^{a_1} ... x_n^{a_n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// Unit exponent `e_j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut alpha = vec![0; n];
        alpha[j] = 1;
        MultiIndex(alpha)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn involves(&self, j: usize) -> bool {
        self.0[j] != 0
    }

    /// True when every exponent (including zeros) is even.
    pub fn is_all_even(&self) -> bool {
        self.0.iter().all(|a| a % 2 == 0)
    }

    /// `Some(q)` when this is the pure power `x_j^q`.
    pub fn pure_power_of(&self) -> Option<(usize, u32)> {
        let mut found = None;
        for (j, &a) in self.0.iter().enumerate() {
            if a != 0 {
                if found.is_some() {
                    return None;
                }
                found = Some((j, a));
            }
        }
        found
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&a, _)| a != 0)
            .map(|(&a, &v)| v.powi(a as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, &a) in self.0.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if a == 1 {
                write!(f, "x{}", j + 1)?;
            } else {
                write!(f, "x{}^{}", j + 1, a)?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

/// Binomial coefficient with overflow detection.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Number of monomials of degree exactly `q` in `n` variables, `C(n+q-1, q)`.
pub fn monomials_of_degree(n: usize, q: usize) -> Option<u64> {
    if n == 0 {
        return Some(u64::from(q == 0));
    }
    binomial((n + q - 1) as u64, q as u64)
}

/// `M = sum_{q=1}^{d} C(n+q-1, q)`.
pub fn monomial_count(n: usize, d: usize) -> Result<usize, PolyError> {
    check_nd(n, d)?;
    let mut total: u64 = 0;
    for q in 1..=d {
        let c = monomials_of_degree(n, q).ok_or(PolyError::Overflow { n, d })?;
        total = total.checked_add(c).ok_or(PolyError::Overflow { n, d })?;
    }
    usize::try_from(total).map_err(|_| PolyError::Overflow { n, d })
}

/// Number of monomials involving a given variable, `m = sum_{q=0}^{d-1} (d-q) C(n+q-2, q)`.
pub fn group_size(n: usize, d: usize) -> Result<usize, PolyError> {
    check_nd(n, d)?;
    if n == 1 {
        return Ok(d);
    }
    let overflow = PolyError::Overflow { n, d };
    let mut total: u64 = 0;
    for q in 0..d {
        let c = binomial((n + q - 2) as u64, q as u64).ok_or(overflow.clone())?;
        let term = c.checked_mul((d - q) as u64).ok_or(overflow.clone())?;
        total = total.checked_add(term).ok_or(overflow.clone())?;
    }
    usize::try_from(total).map_err(|_| overflow)
}

fn check_nd(n: usize, d: usize) -> Result<(), PolyError> {
    if n == 0 {
        return Err(PolyError::ZeroVariables);
    }
    if d == 0 {
        return Err(PolyError::ZeroDegree);
    }
    Ok(())
}

/// Ordered set of multi-indexes of degree `1..=d` in `n` variables.
///
/// Order is graded: ascending total degree, and within a degree descending
/// lexicographic on exponent vectors (`x1^2 > x1*x2 > x2^2`). The first `n`
/// entries are therefore the linear monomials `x_1, ..., x_n`.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    n: usize,
    d: usize,
    indexes: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, d: usize) -> Result<Self, PolyError> {
        let m = monomial_count(n, d)?;
        let mut indexes = Vec::with_capacity(m);
        let mut scratch = vec![0u32; n];
        for q in 1..=d {
            push_degree(&mut indexes, &mut scratch, 0, q as u32);
        }
        debug_assert_eq!(indexes.len(), m);
        let lookup = indexes
            .iter()
            .enumerate()
            .map(|(k, a)| (a.clone(), k))
            .collect();
        Ok(MonomialBasis {
            n,
            d,
            indexes,
            lookup,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Lifted dimension `M`.
    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    pub fn indexes(&self) -> &[MultiIndex] {
        &self.indexes
    }

    pub fn get(&self, k: usize) -> &MultiIndex {
        &self.indexes[k]
    }

    /// Column of a multi-index in the canonical order.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Column holding `x_j^q`, if `q <= d`.
    pub fn power_position(&self, j: usize, q: u32) -> Option<usize> {
        let mut alpha = vec![0; self.n];
        alpha[j] = q;
        self.position(&MultiIndex(alpha))
    }

    /// The lifting map: every monomial of `x`.
    pub fn lift(&self, x: &[f64]) -> Result<DVector<f64>, PolyError> {
        if x.len() != self.n {
            return Err(PolyError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(DVector::from_iterator(
            self.len(),
            self.indexes.iter().map(|a| a.evaluate(x)),
        ))
    }

    /// Linear left inverse of [`lift`](Self::lift): the first `n` components.
    pub fn unlift(&self, phi: &[f64]) -> Result<DVector<f64>, PolyError> {
        if phi.len() != self.len() {
            return Err(PolyError::DimensionMismatch {
                expected: self.len(),
                got: phi.len(),
            });
        }
        Ok(DVector::from_column_slice(&phi[..self.n]))
    }
}

fn push_degree(out: &mut Vec<MultiIndex>, scratch: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(MultiIndex(scratch.to_vec()));
        scratch[pos] = 0;
        return;
    }
    for a in (0..=remaining).rev() {
        scratch[pos] = a;
        push_degree(out, scratch, pos + 1, remaining - a);
    }
    scratch[pos] = 0;
}

/// `y = b + A * lift(x)`, one row per equation.
#[derive(Clone, Debug)]
pub struct PolynomialSystem {
    basis: MonomialBasis,
    a: DMatrix<f64>,
    b: DVector<f64>,
    y: DVector<f64>,
}

impl PolynomialSystem {
    pub fn new(
        basis: MonomialBasis,
        a: DMatrix<f64>,
        b: DVector<f64>,
        y: DVector<f64>,
    ) -> Result<Self, PolyError> {
        if a.ncols() != basis.len() {
            return Err(PolyError::DimensionMismatch {
                expected: basis.len(),
                got: a.ncols(),
            });
        }
        for v in [&b, &y] {
            if v.len() != a.nrows() {
                return Err(PolyError::DimensionMismatch {
                    expected: a.nrows(),
                    got: v.len(),
                });
            }
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinite("A"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinite("b"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(PolyError::NonFinite("y"));
        }
        Ok(PolynomialSystem { basis, a, b, y })
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Number of equations `N`.
    pub fn equations(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// Right-hand side of the lifted linear system, `y - b`.
    pub fn rhs(&self) -> DVector<f64> {
        &self.y - &self.b
    }

    /// Residual `y - b - A lift(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<DVector<f64>, PolyError> {
        let phi = self.basis.lift(x)?;
        Ok(self.residual_lifted(&phi))
    }

    /// Residual `y - b - A phi` for a lifted vector.
    pub fn residual_lifted(&self, phi: &DVector<f64>) -> DVector<f64> {
        &self.y - &self.b - &self.a * phi
    }

    pub fn with_y(&self, y: DVector<f64>) -> Result<Self, PolyError> {
        PolynomialSystem::new(self.basis.clone(), self.a.clone(), self.b.clone(), y)
    }

    pub fn from_json_str(s: &str) -> Result<Self, PolyError> {
        let file: SystemFile =
            serde_json::from_str(s).map_err(|e| PolyError::Json(e.to_string()))?;
        file.into_system()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SystemFile::from_system(self))
            .expect("system serialization cannot fail")
    }
}

/// On-disk layout of a polynomial system.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    pub d: usize,
    pub equations: Vec<EquationFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquationFile {
    pub b: f64,
    pub y: f64,
    pub terms: Vec<TermFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermFile {
    pub alpha: Vec<u32>,
    pub coeff: f64,
}

impl SystemFile {
    pub fn into_system(self) -> Result<PolynomialSystem, PolyError> {
        let basis = MonomialBasis::new(self.n, self.d)?;
        let rows = self.equations.len();
        let mut a = DMatrix::zeros(rows, basis.len());
        let mut b = DVector::zeros(rows);
        let mut y = DVector::zeros(rows);
        for (i, eq) in self.equations.into_iter().enumerate() {
            b[i] = eq.b;
            y[i] = eq.y;
            for term in eq.terms {
                if term.alpha.len() != basis.n() {
                    return Err(PolyError::AlphaLength {
                        equation: i,
                        expected: basis.n(),
                        got: term.alpha.len(),
                    });
                }
                let alpha = MultiIndex(term.alpha);
                let degree = alpha.degree();
                let k = basis.position(&alpha).ok_or(PolyError::AlphaDegree {
                    equation: i,
                    degree,
                    max: basis.d(),
                })?;
                // Repeated monomials within one equation accumulate.
                a[(i, k)] += term.coeff;
            }
        }
        PolynomialSystem::new(basis, a, b, y)
    }

    pub fn from_system(system: &PolynomialSystem) -> Self {
        let basis = system.basis();
        let equations = (0..system.equations())
            .map(|i| EquationFile {
                b: system.b()[i],
                y: system.y()[i],
                terms: basis
                    .indexes()
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| system.a()[(i, *k)] != 0.0)
                    .map(|(k, alpha)| TermFile {
                        alpha: alpha.0.clone(),
                        coeff: system.a()[(i, k)],
                    })
                    .collect(),
            })
            .collect();
        SystemFile {
            n: basis.n(),
            d: basis.d(),
            equations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alphas(basis: &MonomialBasis) -> Vec<Vec<u32>> {
        basis.indexes().iter().map(|a| a.0.clone()).collect()
    }

    #[test]
    fn basis_two_vars_degree_two() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        assert_eq!(
            alphas(&basis),
            vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn basis_single_variable_chain() {
        let basis = MonomialBasis::new(1, 3).unwrap();
        assert_eq!(alphas(&basis), vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomial_count(2, 2).unwrap(), 5);
        assert_eq!(monomial_count(3, 2).unwrap(), 9);
        assert_eq!(monomial_count(5, 4).unwrap(), 125);
        assert_eq!(MonomialBasis::new(5, 4).unwrap().len(), 125);
        for n in 1..10 {
            assert_eq!(monomial_count(n, 1).unwrap(), n);
        }
    }

    #[test]
    fn counting_rejects_bad_input() {
        assert_eq!(monomial_count(0, 2), Err(PolyError::ZeroVariables));
        assert_eq!(monomial_count(2, 0), Err(PolyError::ZeroDegree));
        assert!(MonomialBasis::new(0, 1).is_err());
        assert_eq!(
            monomial_count(1000, 1000),
            Err(PolyError::Overflow { n: 1000, d: 1000 })
        );
        assert!(matches!(
            group_size(1000, 1000),
            Err(PolyError::Overflow { .. })
        ));
    }

    #[test]
    fn group_sizes() {
        assert_eq!(group_size(2, 2).unwrap(), 3);
        assert_eq!(group_size(3, 2).unwrap(), 4);
        assert_eq!(group_size(1, 4).unwrap(), 4);
        for n in 1..10 {
            assert_eq!(group_size(n, 1).unwrap(), 1);
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(2, 3), Some(0));
        assert_eq!(binomial(0, 0), Some(1));
        assert_eq!(binomial(67, 33), Some(14_226_520_737_620_288_370));
        assert_eq!(binomial(68, 34), None);
    }

    #[test]
    fn lift_examples() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let phi = basis.lift(&[2.0, 3.0]).unwrap();
        assert_eq!(phi.as_slice(), &[2.0, 3.0, 4.0, 6.0, 9.0]);
        let phi = basis.lift(&[1.0, 0.0]).unwrap();
        assert_eq!(phi.as_slice(), &[1.0, 0.0, 1.0, 0.0, 0.0]);
        let phi = basis.lift(&[0.0, 0.0]).unwrap();
        assert!(phi.iter().all(|&v| v == 0.0));
        assert!(basis.lift(&[1.0]).is_err());
    }

    #[test]
    fn unlift_projects() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let x = basis.unlift(&[1.0, 2.0, 9.0, 9.0, 9.0]).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0]);
        assert!(basis.unlift(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn evaluate_residuals() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 5, &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let x0 = [1.0, 0.0];
        let y = &a * basis.lift(&x0).unwrap();
        let system = PolynomialSystem::new(basis.clone(), a, DVector::zeros(2), y).unwrap();
        assert!(system.evaluate(&x0).unwrap().norm() < 1e-15);

        let y = DVector::from_vec(vec![3.0, -1.0]);
        let zero =
            PolynomialSystem::new(basis, DMatrix::zeros(2, 5), DVector::zeros(2), y.clone())
                .unwrap();
        assert_eq!(zero.evaluate(&[5.0, 7.0]).unwrap(), y);
    }

    #[test]
    fn system_rejects_bad_shapes() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        assert!(PolynomialSystem::new(
            basis.clone(),
            DMatrix::zeros(2, 4),
            DVector::zeros(2),
            DVector::zeros(2)
        )
        .is_err());
        let mut a = DMatrix::zeros(2, 5);
        a[(0, 0)] = f64::NAN;
        assert_eq!(
            PolynomialSystem::new(basis, a, DVector::zeros(2), DVector::zeros(2)).unwrap_err(),
            PolyError::NonFinite("A")
        );
    }

    #[test]
    fn json_loader_maps_alphas() {
        let text = r#"{ "n": 2, "d": 2, "equations": [
            { "b": 0.5, "y": 2.5, "terms": [ { "alpha": [1,0], "coeff": 1.0 },
                                             { "alpha": [2,0], "coeff": 1.0 } ] },
            { "b": 0.0, "y": 0.0, "terms": [ { "alpha": [1,1], "coeff": 2.0 } ] } ] }"#;
        let system = PolynomialSystem::from_json_str(text).unwrap();
        assert_eq!(system.equations(), 2);
        assert_eq!(system.a()[(0, 0)], 1.0);
        assert_eq!(system.a()[(0, 2)], 1.0);
        assert_eq!(system.a()[(1, 3)], 2.0);
        assert_eq!(system.rhs().as_slice(), &[2.0, 0.0]);

        let back = PolynomialSystem::from_json_str(&system.to_json_string()).unwrap();
        assert_eq!(back.a(), system.a());
        assert_eq!(back.y(), system.y());
    }

    #[test]
    fn json_loader_rejects_out_of_range_degree() {
        let text = r#"{ "n": 2, "d": 2, "equations": [
            { "b": 0, "y": 1, "terms": [ { "alpha": [2,1], "coeff": 1.0 } ] } ] }"#;
        assert!(matches!(
            PolynomialSystem::from_json_str(text),
            Err(PolyError::AlphaDegree { degree: 3, .. })
        ));
        let text = r#"{ "n": 2, "d": 2, "equations": [
            { "b": 0, "y": 1, "terms": [ { "alpha": [0,0], "coeff": 1.0 } ] } ] }"#;
        assert!(matches!(
            PolynomialSystem::from_json_str(text),
            Err(PolyError::AlphaDegree { degree: 0, .. })
        ));
        assert!(matches!(
            PolynomialSystem::from_json_str("{ \"n\": 2 "),
            Err(PolyError::Json(_))
        ));
    }

    #[test]
    fn display_monomials() {
        let basis = MonomialBasis::new(2, 2).unwrap();
        let names: Vec<String> = basis.indexes().iter().map(|a| a.to_string()).collect();
        assert_eq!(names, ["x1", "x2", "x1^2", "x1*x2", "x2^2"]);
    }
}
