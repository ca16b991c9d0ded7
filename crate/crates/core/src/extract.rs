//! Reading base variables back out of a lifted estimate.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::grouping::GroupStructure;
use crate::poly::{MonomialBasis, MultiIndex, PolynomialSystem};

/// Relative threshold for treating a lifted entry as zero.
pub const ZERO_RTOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("phi has length {got}, basis has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("estimate of x{var}^{power} is negative ({value:.3e}); the relaxation did not factor")]
    NegativeEvenPower { var: usize, power: u32, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExtractionMethod {
    LinearReadout,
    OddRoot,
    QuadraticSign,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtractionReport {
    pub x_hat: Vec<f64>,
    pub support: Vec<usize>,
    pub method_used: ExtractionMethod,
    /// Every bilinear estimate agrees in sign with the propagated assignment.
    pub sign_consistent: bool,
    /// Sign graph had more than one component; each was anchored separately.
    pub disconnected_sign_graph: bool,
    pub verify_residual: f64,
}

pub fn zero_tolerance(phi: &DVector<f64>) -> f64 {
    ZERO_RTOL * (1.0 + phi.norm())
}

/// Real root of odd degree, preserving sign.
fn signed_root(v: f64, q: u32) -> f64 {
    if q == 1 {
        v
    } else if q == 3 {
        v.cbrt()
    } else {
        v.signum() * v.abs().powf(1.0 / q as f64)
    }
}

pub fn extract(
    basis: &MonomialBasis,
    groups: &GroupStructure,
    phi: &DVector<f64>,
    system: &PolynomialSystem,
) -> Result<ExtractionReport, ExtractError> {
    if phi.len() != basis.len() {
        return Err(ExtractError::DimensionMismatch {
            expected: basis.len(),
            got: phi.len(),
        });
    }
    let n = basis.n();
    let tol = zero_tolerance(phi);
    let support = groups.support(phi, tol);
    let linear_ok = (0..n).all(|j| groups.is_active(j));

    let mut report = ExtractionReport {
        x_hat: vec![0.0; n],
        support: support.clone(),
        method_used: ExtractionMethod::LinearReadout,
        sign_consistent: true,
        disconnected_sign_graph: false,
        verify_residual: 0.0,
    };

    if linear_ok {
        report.x_hat = phi.as_slice()[..n].to_vec();
    } else {
        report.method_used = ExtractionMethod::OddRoot;
        let mut sign_known = vec![true; n];
        for &j in &support {
            if let Some(v) = odd_power_estimate(basis, groups, phi, j, tol) {
                report.x_hat[j] = v;
                continue;
            }
            report.method_used = ExtractionMethod::QuadraticSign;
            sign_known[j] = false;
            report.x_hat[j] = even_power_magnitude(basis, groups, phi, j, tol)?;
        }
        if report.method_used == ExtractionMethod::QuadraticSign {
            let (consistent, disconnected) =
                resolve_signs(basis, groups, phi, &support, &sign_known, tol, &mut report.x_hat);
            report.sign_consistent = consistent;
            report.disconnected_sign_graph = disconnected;
        }
    }
    report.verify_residual = system
        .evaluate(&report.x_hat)
        .map(|r| r.norm())
        .unwrap_or(f64::INFINITY);
    Ok(report)
}

fn odd_power_estimate(
    basis: &MonomialBasis,
    groups: &GroupStructure,
    phi: &DVector<f64>,
    j: usize,
    tol: f64,
) -> Option<f64> {
    let mut q = 1u32;
    while (q as usize) <= basis.d() {
        if let Some(k) = basis.power_position(j, q) {
            if groups.is_active(k) && phi[k].abs() > tol {
                return Some(signed_root(phi[k], q));
            }
        }
        q += 2;
    }
    None
}

fn even_power_magnitude(
    basis: &MonomialBasis,
    groups: &GroupStructure,
    phi: &DVector<f64>,
    j: usize,
    tol: f64,
) -> Result<f64, ExtractError> {
    let mut q = 2u32;
    while (q as usize) <= basis.d() {
        if let Some(k) = basis.power_position(j, q) {
            if groups.is_active(k) {
                let v = phi[k];
                if v < -tol {
                    return Err(ExtractError::NegativeEvenPower {
                        var: j + 1,
                        power: q,
                        value: v,
                    });
                }
                return Ok(v.max(0.0).powf(1.0 / q as f64));
            }
        }
        q += 2;
    }
    Ok(0.0)
}

/// BFS over bilinear terms `x_i x_j`; returns (consistent, disconnected).
fn resolve_signs(
    basis: &MonomialBasis,
    groups: &GroupStructure,
    phi: &DVector<f64>,
    support: &[usize],
    sign_known: &[bool],
    tol: f64,
    x: &mut [f64],
) -> (bool, bool) {
    let n = basis.n();
    let in_support: Vec<bool> = (0..n).map(|j| support.contains(&j)).collect();
    // adjacency: (neighbor, sign of the bilinear estimate)
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    for &i in support {
        for &j in support {
            if j <= i {
                continue;
            }
            let mut alpha = vec![0u32; n];
            alpha[i] = 1;
            alpha[j] = 1;
            if let Some(k) = basis.position(&MultiIndex(alpha)) {
                if groups.is_active(k) && phi[k].abs() > tol {
                    let s = phi[k].signum();
                    adj[i].push((j, s));
                    adj[j].push((i, s));
                    edges.push((i, j, s));
                }
            }
        }
    }

    let mut assigned: Vec<bool> = (0..n).map(|j| !in_support[j] || sign_known[j]).collect();
    let mut queue: VecDeque<usize> = support.iter().copied().filter(|&j| sign_known[j]).collect();
    let mut components = 0usize;
    let mut anchored_by_known = !queue.is_empty();
    loop {
        while let Some(i) = queue.pop_front() {
            for &(j, s) in &adj[i] {
                if !assigned[j] {
                    let sign_i = if x[i] < 0.0 { -1.0 } else { 1.0 };
                    x[j] = x[j].abs() * s * sign_i;
                    assigned[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if anchored_by_known {
            components += 1;
            anchored_by_known = false;
        }
        match support.iter().copied().find(|&j| !assigned[j]) {
            Some(j) => {
                x[j] = x[j].abs();
                assigned[j] = true;
                queue.push_back(j);
                components += 1;
            }
            None => break,
        }
    }
    let consistent = edges.iter().all(|&(i, j, s)| {
        let prod = x[i] * x[j];
        prod == 0.0 || prod.signum() == s
    });
    (consistent, components > 1)
}

/// `verified <=> ||y - b - A lift(x)|| <= tol (1 + ||y||)`.
pub fn verify(system: &PolynomialSystem, x_hat: &[f64], tol: f64) -> (bool, f64) {
    match system.evaluate(x_hat) {
        Ok(r) => {
            let norm = r.norm();
            (norm <= tol * (1.0 + system.y().norm()), norm)
        }
        Err(_) => (false, f64::INFINITY),
    }
}
