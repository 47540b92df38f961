//! Wall-time measurements of the coupling-term evaluators.
//!
//! The recursive tracer re-derives every path through the update DAG and
//! grows exponentially with the traced span k - i; the memoized variant is
//! linear. These helpers quantify both, for the bench CLI mode and the
//! asymptotic-cost acceptance check.

use crate::adjoint::{
    adjoint_sweep, coupling_memoized, coupling_recursive, CouplingCache, DerivativeBlocks,
    SweepOptions,
};
use crate::error::Result;
use crate::fea::{objective_selector, ForwardTrace};
use crate::mesh::Mesh;
use crate::problem::Problem;
use crate::schedule::{Schedule, ScheduleStep};
use std::time::Instant;

/// Seconds to evaluate d(R^k)/d(u^i) for every element at span `k - i`,
/// recursive mode (i = 1).
pub fn time_recursive_span(
    mesh: &Mesh,
    trace: &ForwardTrace,
    blocks: &DerivativeBlocks,
    span: usize,
    cap: usize,
) -> Result<f64> {
    let (i, k) = (1, 1 + span);
    let started = Instant::now();
    for e in 0..mesh.n_elements() {
        let block = coupling_recursive(mesh, trace, blocks, k, i, e, cap)?;
        std::hint::black_box(&block);
    }
    Ok(started.elapsed().as_secs_f64())
}

/// Same measurement through the memo table.
pub fn time_memoized_span(
    mesh: &Mesh,
    trace: &ForwardTrace,
    blocks: &DerivativeBlocks,
    span: usize,
) -> Result<f64> {
    let (i, k) = (1, 1 + span);
    let started = Instant::now();
    for e in 0..mesh.n_elements() {
        let mut cache = CouplingCache::new();
        let block = coupling_memoized(mesh, trace, blocks, k, i, e, &mut cache)?;
        std::hint::black_box(&block);
    }
    Ok(started.elapsed().as_secs_f64())
}

/// Seconds for a full memoized backward sweep seeded at step `m`.
pub fn time_memoized_sweep(problem: &Problem, trace: &ForwardTrace, m: usize) -> Result<f64> {
    let dof = problem.objective_dof()?;
    let l = objective_selector(&problem.mesh, dof)?;
    let opts = SweepOptions {
        recursion_cap: problem.sweep.recursion_cap,
        ..SweepOptions::default()
    };
    let started = Instant::now();
    let adj = adjoint_sweep(&problem.mesh, trace, &l, m, &opts)?;
    std::hint::black_box(&adj.lambdas[1][0]);
    Ok(started.elapsed().as_secs_f64())
}

/// Resamples a schedule to `m` equal steps, interpolating temperature along
/// the original time axis and holding the load scale piecewise constant.
/// Used to bench sweep cost as a function of the cycle length without
/// changing the physics regime.
pub fn resample_schedule(schedule: &Schedule, m: usize) -> Schedule {
    let total: f64 = schedule.steps.iter().map(|s| s.dt).sum();
    let dt = total / m as f64;
    let mut cumulative = Vec::with_capacity(schedule.len() + 1);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for s in &schedule.steps {
        acc += s.dt;
        cumulative.push(acc);
    }
    let temp_at = |t: f64| -> f64 {
        // Piecewise-linear in time through the step-end temperatures.
        for (j, s) in schedule.steps.iter().enumerate() {
            if t <= cumulative[j + 1] || j == schedule.len() - 1 {
                let t0 = cumulative[j];
                let frac = ((t - t0) / (cumulative[j + 1] - t0)).clamp(0.0, 1.0);
                let prev = if j == 0 {
                    schedule.t_initial
                } else {
                    schedule.steps[j - 1].temperature
                };
                return prev + frac * (s.temperature - prev);
            }
        }
        schedule.steps[schedule.len() - 1].temperature
    };
    let load_at = |t: f64| -> (f64, ScheduleStep) {
        for (j, s) in schedule.steps.iter().enumerate() {
            if t <= cumulative[j + 1] || j == schedule.len() - 1 {
                return (s.load_scale, *s);
            }
        }
        (0.0, schedule.steps[0])
    };
    let steps = (1..=m)
        .map(|j| {
            let t_end = dt * j as f64;
            let (load_scale, template) = load_at(t_end);
            ScheduleStep {
                dt,
                temperature: temp_at(t_end),
                load_scale,
                tag: template.tag,
            }
        })
        .collect();
    Schedule {
        t_initial: schedule.t_initial,
        t_ref: schedule.t_ref,
        steps,
    }
}

/// Fits the growth of per-span timings as the ratio t(s+ds)/t(s) averaged
/// over consecutive measured spans (geometric mean).
pub fn mean_doubling_ratio(spans: &[usize], seconds: &[f64]) -> f64 {
    let mut ratios = Vec::new();
    for (sw, tw) in spans.windows(2).zip(seconds.windows(2)) {
        let (s0, s1, t0, t1) = (sw[0], sw[1], tw[0], tw[1]);
        if t0 > 0.0 && t1 > 0.0 && s1 > s0 {
            // Normalize to a per-unit-span growth factor.
            ratios.push((t1 / t0).powf(1.0 / (s1 - s0) as f64));
        }
    }
    if ratios.is_empty() {
        1.0
    } else {
        let log_sum: f64 = ratios.iter().map(|r| r.ln()).sum();
        (log_sum / ratios.len() as f64).exp()
    }
}

/// Least-squares slope of log(t) against log(m): the fitted cost exponent.
pub fn fitted_exponent(ms: &[usize], seconds: &[f64]) -> f64 {
    let xs: Vec<f64> = ms.iter().map(|m| (*m as f64).ln()).collect();
    let ys: Vec<f64> = seconds.iter().map(|t| t.max(1e-12).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
