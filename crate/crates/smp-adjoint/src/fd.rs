//! Brute-force finite-difference sensitivity oracle and the adjoint-vs-FD
//! verification report.
//!
//! Deliberately method-independent: every probe is a full forward analysis,
//! so the oracle shares no derivative code with the adjoint path it checks.

use crate::error::{Error, Result};
use crate::problem::Problem;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Finite-difference scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FdScheme {
    Forward,
    Central,
}

/// Difference quotient of a scalar function at `x`.
pub fn fd_scalar<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    x: f64,
    scheme: FdScheme,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Contract(format!("FD step must be positive, got {h}")));
    }
    match scheme {
        FdScheme::Forward => Ok((f(x + h)? - f(x)?) / h),
        FdScheme::Central => Ok((f(x + h)? - f(x - h)?) / (2.0 * h)),
    }
}

/// FD sensitivity of the objective w.r.t. one element's design variable.
/// Each evaluation is a full forward run of the thermo-mechanical cycle.
pub fn fd_sensitivity(
    problem: &Problem,
    rho: &[f64],
    elem: usize,
    scheme: FdScheme,
    h: f64,
) -> Result<f64> {
    if elem >= rho.len() {
        return Err(Error::Contract(format!("element {elem} out of range")));
    }
    let lo = problem.params.rho_min;
    let (min_probe, max_probe) = match scheme {
        FdScheme::Forward => (rho[elem], rho[elem] + h),
        FdScheme::Central => (rho[elem] - h, rho[elem] + h),
    };
    if min_probe < lo - 1e-15 || max_probe > 1.0 + 1e-15 {
        return Err(Error::Contract(format!(
            "FD probe for element {elem} leaves [{lo}, 1]: rho = {}, h = {h}",
            rho[elem]
        )));
    }
    fd_scalar(
        |x| {
            let mut r = rho.to_vec();
            r[elem] = x;
            problem.theta(&r)
        },
        rho[elem],
        scheme,
        h,
    )
}

/// One element's verification entry.
#[derive(Debug, Clone)]
pub struct ElementRow {
    pub element: usize,
    pub adjoint: f64,
    pub fd: f64,
    /// Normalized error |(adjoint - fd)/fd|; `None` when the row is omitted
    /// by the near-zero rule.
    pub ne: Option<f64>,
    /// Forward-solve failure at the perturbed design, if any.
    pub error: Option<String>,
}

/// Adjoint-vs-FD comparison over every element.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub rows: Vec<ElementRow>,
    /// Max NE over non-omitted, non-failed rows.
    pub max_ne: f64,
    pub omitted: usize,
    pub failed: usize,
    pub theta: f64,
    pub scheme: FdScheme,
    pub h_base: f64,
    pub near_zero_rel: f64,
}

impl VerificationReport {
    pub fn passes(&self, gate: f64) -> bool {
        self.failed == 0 && self.max_ne < gate
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>8}  {:>15}  {:>15}  {:>12}",
            "Element", "Adjoint", "FiniteDiff", "NE"
        )?;
        for r in &self.rows {
            let ne = match (&r.error, r.ne) {
                (Some(e), _) => format!("failed: {e}"),
                (None, Some(ne)) => format!("{ne:.3e}"),
                (None, None) => "--".to_string(),
            };
            writeln!(
                f,
                "{:>8}  {:>15.7}  {:>15.7}  {:>12}",
                r.element + 1,
                r.adjoint,
                r.fd,
                ne
            )?;
        }
        writeln!(
            f,
            "theta = {:.7e}; max NE = {:.3e} over {} rows ({} omitted, {} failed)",
            self.theta,
            self.max_ne,
            self.rows.len(),
            self.omitted,
            self.failed
        )
    }
}

/// Runs the adjoint once plus one FD probe per element (in parallel) and
/// assembles the verification table. The per-element step is
/// `h_base * max(rho_e, 0.1)`; rows with `|fd| < near_zero_rel * max|fd|`
/// have their NE omitted.
pub fn verify_report(
    problem: &Problem,
    rho: &[f64],
    scheme: FdScheme,
    h_base: f64,
    near_zero_rel: f64,
) -> Result<VerificationReport> {
    let gradient = problem.gradient(rho)?;
    let adjoint = &gradient.sensitivities.0;

    let fd: Vec<std::result::Result<f64, String>> = (0..rho.len())
        .into_par_iter()
        .map(|e| {
            let h = h_base * rho[e].max(0.1);
            fd_sensitivity(problem, rho, e, scheme, h).map_err(|err| err.to_string())
        })
        .collect();

    let max_fd = fd
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let threshold = near_zero_rel * max_fd;

    let mut rows = Vec::with_capacity(rho.len());
    let mut max_ne = 0.0f64;
    let mut omitted = 0;
    let mut failed = 0;
    for (e, r) in fd.into_iter().enumerate() {
        match r {
            Ok(fd_val) => {
                let ne = if fd_val.abs() < threshold {
                    omitted += 1;
                    None
                } else {
                    let ne = ((adjoint[e] - fd_val) / fd_val).abs();
                    max_ne = max_ne.max(ne);
                    Some(ne)
                };
                rows.push(ElementRow {
                    element: e,
                    adjoint: adjoint[e],
                    fd: fd_val,
                    ne,
                    error: None,
                });
            }
            Err(msg) => {
                failed += 1;
                rows.push(ElementRow {
                    element: e,
                    adjoint: adjoint[e],
                    fd: f64::NAN,
                    ne: None,
                    error: Some(msg),
                });
            }
        }
    }

    Ok(VerificationReport {
        rows,
        max_ne,
        omitted,
        failed,
        theta: gradient.theta,
        scheme,
        h_base,
        near_zero_rel,
    })
}

/// Result of the step-size robustness sweep.
#[derive(Debug, Clone)]
pub struct HSweep {
    pub h_values: Vec<f64>,
    pub max_ne: Vec<f64>,
    /// Ratio of the largest to the smallest max-NE over the sweep.
    pub spread: f64,
    /// A spread of 10x or more across the sweep indicates the smaller steps
    /// are dominated by floating-point noise rather than truncation.
    pub noise_dominated: bool,
}

/// Re-runs the verification at several FD steps. Central differences of a
/// smooth objective have O(h^2) truncation error and O(eps/h) roundoff, so
/// a strongly h-dependent max NE flags the roundoff-dominated regime.
pub fn h_sweep(
    problem: &Problem,
    rho: &[f64],
    scheme: FdScheme,
    h_values: &[f64],
    near_zero_rel: f64,
) -> Result<HSweep> {
    let mut max_ne = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let report = verify_report(problem, rho, scheme, h, near_zero_rel)?;
        max_ne.push(report.max_ne);
    }
    let hi = max_ne.iter().cloned().fold(0.0f64, f64::max);
    let lo = max_ne.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(HSweep {
        h_values: h_values.to_vec(),
        max_ne,
        spread,
        noise_dominated: spread >= 10.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_differences_are_exact_for_quadratics() {
        // theta = rho^2 at rho = 0.3, h = 1e-3 -> exactly 0.6 up to roundoff.
        let d = fd_scalar(|x| Ok(x * x), 0.3, FdScheme::Central, 1e-3).unwrap();
        assert!((d - 0.6).abs() < 1e-12);
    }

    #[test]
    fn constant_function_has_zero_derivative() {
        for scheme in [FdScheme::Forward, FdScheme::Central] {
            for h in [1e-3, 1e-6] {
                let d = fd_scalar(|_| Ok(7.25), 0.5, scheme, h).unwrap();
                assert_eq!(d, 0.0);
            }
        }
    }

    #[test]
    fn forward_scheme_has_first_order_error() {
        // f(x) = x^3: forward error ~ 3 x h, central error ~ h^2.
        let x = 0.7;
        let h = 1e-4;
        let exact = 3.0 * x * x;
        let fwd = fd_scalar(|v| Ok(v * v * v), x, FdScheme::Forward, h).unwrap();
        let cen = fd_scalar(|v| Ok(v * v * v), x, FdScheme::Central, h).unwrap();
        assert!((fwd - exact).abs() > 1e2 * (cen - exact).abs());
    }
}
