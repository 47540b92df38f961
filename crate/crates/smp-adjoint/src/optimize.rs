//! Gradient-driven density update loop: sensitivity filter, optimality-
//! criteria step under a volume constraint, and the outer iteration.

use crate::error::{Error, Result};
use crate::fd::{fd_sensitivity, FdScheme};
use crate::mesh::Mesh;
use crate::problem::Problem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Element-wise design field with its filter and constraint metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignField {
    pub rho: Vec<f64>,
    /// Filter radius in element widths.
    pub r_min: f64,
    /// Volume fraction bound: mean(rho) <= vol_frac.
    pub vol_frac: f64,
}

impl DesignField {
    pub fn uniform(n: usize, rho0: f64, r_min: f64, vol_frac: f64) -> Self {
        Self {
            rho: vec![rho0; n],
            r_min,
            vol_frac,
        }
    }

    pub fn volume(&self) -> f64 {
        self.rho.iter().sum::<f64>() / self.rho.len() as f64
    }
}

/// Mesh-independence filter in sensitivity form: a normalized hat-kernel
/// convolution over element centroids,
/// `s_f(e) = sum_j w_ej s_j / sum_j w_ej` with `w(d) = max(0, r - d)`.
/// Uniform inputs pass through unchanged, and the w-weighted mean of the
/// output equals that of the input (the weight matrix is symmetric).
pub fn density_filter(mesh: &Mesh, field: &DesignField, sens: &[f64]) -> Vec<f64> {
    let radius = field.r_min * (mesh.lx / mesh.nx as f64);
    let centroids: Vec<[f64; 2]> = (0..mesh.n_elements()).map(|e| mesh.centroid(e)).collect();
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let ce = centroids[e];
            let mut num = 0.0;
            let mut den = 0.0;
            for (j, cj) in centroids.iter().enumerate() {
                let d = ((ce[0] - cj[0]).powi(2) + (ce[1] - cj[1]).powi(2)).sqrt();
                let w = (radius - d).max(0.0);
                num += w * sens[j];
                den += w;
            }
            num / den
        })
        .collect()
}

/// Optimality-criteria update with a move limit and a bisected Lagrange
/// multiplier enforcing `mean(rho) <= vol_frac`.
///
/// The OC ratio requires a positive descent measure; mixed-sign
/// sensitivities are handled by shifting them so that `shift - s_e > 0` for
/// every element (the shift is the positive part of the largest sensitivity,
/// scaled up by a hair). A uniformly zero input is a fixed point and
/// returns the field unchanged.
pub fn oc_update(
    field: &DesignField,
    filtered_sens: &[f64],
    move_limit: f64,
    rho_min: f64,
) -> Result<Vec<f64>> {
    let n = field.rho.len();
    if filtered_sens.len() != n {
        return Err(Error::Contract(format!(
            "sensitivity length {} != element count {n}",
            filtered_sens.len()
        )));
    }
    let max_s = filtered_sens.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shift = if max_s > 0.0 { max_s * (1.0 + 1e-6) } else { 0.0 };
    let descent: Vec<f64> = filtered_sens.iter().map(|s| shift - s).collect();
    let d_max = descent.iter().cloned().fold(0.0f64, f64::max);
    if d_max == 0.0 {
        return Ok(field.rho.clone());
    }

    let trial = |lambda: f64| -> Vec<f64> {
        field
            .rho
            .iter()
            .zip(&descent)
            .map(|(&rho, &d)| {
                let ratio = (d / lambda).max(0.0);
                let target = rho * ratio.sqrt();
                target
                    .min(rho + move_limit)
                    .max(rho - move_limit)
                    .min(1.0)
                    .max(rho_min)
            })
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;

    // Bracket the multiplier: large lambda shrinks the design.
    let mut lo = d_max * 1e-12;
    let mut hi = d_max * 1e12;
    if mean(&trial(lo)) <= field.vol_frac {
        // Constraint inactive even at the most permissive multiplier.
        return Ok(trial(lo));
    }
    if mean(&trial(hi)) > field.vol_frac {
        return Err(Error::Optimizer(format!(
            "volume constraint {:.4} unreachable: design floor exceeds it",
            field.vol_frac
        )));
    }

    let mut best = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let candidate = trial(mid);
        let v = mean(&candidate);
        if v > field.vol_frac {
            lo = mid;
        } else {
            // Feasible side.
            let done = (field.vol_frac - v) <= 1e-9 * field.vol_frac.max(1e-12);
            best = Some(candidate);
            hi = mid;
            if done {
                break;
            }
        }
    }
    best.ok_or_else(|| {
        Error::Optimizer("volume bisection failed to converge in 200 iterations".into())
    })
}

/// One accepted iteration of the optimization loop.
#[derive(Debug, Clone)]
pub struct OptRecord {
    pub iteration: usize,
    pub theta: f64,
    pub volume: f64,
    pub max_change: f64,
    /// Wall time of the iteration; excluded from determinism comparisons.
    pub wall_secs: f64,
}

/// Iteration history of an optimization run.
#[derive(Debug, Clone, Default)]
pub struct OptHistory(pub Vec<OptRecord>);

impl OptHistory {
    /// Numeric content (everything except wall time), for determinism checks.
    pub fn numeric(&self) -> Vec<(usize, f64, f64, f64)> {
        self.0
            .iter()
            .map(|r| (r.iteration, r.theta, r.volume, r.max_change))
            .collect()
    }
}

/// Options of the optimization loop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeOptions {
    pub max_iters: usize,
    /// Stop when the max design change drops below this.
    pub tol: f64,
    pub move_limit: f64,
    /// Per-iteration FD spot check of one significant element.
    pub paranoid: bool,
    pub seed: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 20,
            tol: 1e-3,
            move_limit: 0.2,
            paranoid: false,
            seed: 7,
        }
    }
}

/// Runs forward -> adjoint -> filter -> OC until the design stalls or the
/// iteration budget is exhausted. Returns the final field and the history.
/// `snapshot` is called once per accepted iteration (e.g. to write VTK).
pub fn optimize_loop<F: FnMut(usize, &DesignField, f64) -> Result<()>>(
    problem: &Problem,
    mut field: DesignField,
    opts: &OptimizeOptions,
    mut snapshot: F,
) -> Result<(DesignField, OptHistory)> {
    if field.rho.len() != problem.mesh.n_elements() {
        return Err(Error::Contract(format!(
            "design field has {} entries for {} elements",
            field.rho.len(),
            problem.mesh.n_elements()
        )));
    }
    let mut history = OptHistory::default();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    for iteration in 1..=opts.max_iters {
        let started = Instant::now();
        let gradient = problem
            .gradient(&field.rho)
            .map_err(|e| Error::Optimizer(format!("iteration {iteration}: {e}")))?;
        let sens = &gradient.sensitivities.0;

        if opts.paranoid {
            spot_check(problem, &field.rho, sens, &mut rng)
                .map_err(|e| Error::Optimizer(format!("iteration {iteration}: {e}")))?;
        }

        let filtered = density_filter(&problem.mesh, &field, sens);
        let new_rho = oc_update(&field, &filtered, opts.move_limit, problem.params.rho_min)
            .map_err(|e| Error::Optimizer(format!("iteration {iteration}: {e}")))?;
        let max_change = field
            .rho
            .iter()
            .zip(&new_rho)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        field.rho = new_rho;

        history.0.push(OptRecord {
            iteration,
            theta: gradient.theta,
            volume: field.volume(),
            max_change,
            wall_secs: started.elapsed().as_secs_f64(),
        });
        snapshot(iteration, &field, gradient.theta)?;

        if max_change < opts.tol {
            break;
        }
    }
    Ok((field, history))
}

/// Forward-difference spot check of one randomly chosen significant element
/// (|s| >= 10% of the max) against the adjoint value, NE < 1e-3.
fn spot_check(
    problem: &Problem,
    rho: &[f64],
    sens: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let max_s = sens.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max_s == 0.0 {
        return Ok(());
    }
    let significant: Vec<usize> = (0..sens.len())
        .filter(|&e| sens[e].abs() >= 0.1 * max_s)
        .collect();
    let elem = significant[rng.gen_range(0..significant.len())];
    let h = 1e-6 * rho[elem].max(0.1);
    // Forward differences probe upward; fall back to a backward difference
    // when the element sits at the upper design bound.
    let fd = if rho[elem] + h <= 1.0 {
        fd_sensitivity(problem, rho, elem, FdScheme::Forward, h)?
    } else {
        crate::fd::fd_scalar(
            |x| {
                let mut r = rho.to_vec();
                r[elem] = x;
                problem.theta(&r)
            },
            rho[elem] - h,
            FdScheme::Forward,
            h,
        )?
    };
    let ne = ((sens[elem] - fd) / fd).abs();
    if ne >= 1e-3 {
        return Err(Error::Optimizer(format!(
            "paranoid FD spot check failed on element {elem}: adjoint {:.6e}, fd {fd:.6e}, NE {ne:.3e}",
            sens[elem]
        )));
    }
    Ok(())
}
