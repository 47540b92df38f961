//! Batch run modes shared by the CLI and the examples.

use crate::adjoint::DerivativeBlocks;
use crate::bench::{resample_schedule, time_memoized_span, time_memoized_sweep, time_recursive_span};
use crate::config::ResolvedConfig;
use crate::error::{Error, Result};
use crate::fd::verify_report;
use crate::io;
use crate::optimize::optimize_loop;
use std::path::{Path, PathBuf};

/// Batch mode selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Forward,
    Verify,
    Optimize,
    Bench,
}

/// CLI-level overrides of config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub paranoid: bool,
    pub out_dir: Option<PathBuf>,
}

/// Artifacts and exit status of one batch run.
#[derive(Debug)]
pub struct RunOutcome {
    /// 0 success; 3 verification gate failure (per the exit-code table).
    pub exit_code: i32,
    pub outputs: Vec<PathBuf>,
    pub summary: String,
}

/// Executes one batch mode, writing artifacts under the output directory.
pub fn run_mode(cfg: &ResolvedConfig, mode: Mode, overrides: &Overrides) -> Result<RunOutcome> {
    for line in &cfg.applied_defaults {
        log::info!("config default applied: {line}");
    }
    let out_dir = overrides
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    std::fs::create_dir_all(&out_dir)?;

    let problem = cfg.problem()?;
    let rho = vec![cfg.raw.design.initial_rho; problem.mesh.n_elements()];
    let mut outputs = Vec::new();

    match mode {
        Mode::Forward => {
            let gradient = problem.gradient(&rho)?;
            let dof = problem.objective_dof()?;

            let path = out_dir.join("trace.csv");
            std::fs::write(&path, io::trace_csv_string(&gradient.trace, dof))?;
            outputs.push(path);

            for (i, rec) in gradient.trace.records.iter().enumerate() {
                let path = out_dir.join(format!("step_{i:03}.vtk"));
                io::write_vtk(
                    &path,
                    &problem.mesh,
                    &format!("forward step {i}"),
                    Some(&rec.u),
                    Some(&rho),
                )?;
                outputs.push(path);
            }

            let path = out_dir.join("sensitivity.csv");
            std::fs::write(&path, io::sensitivity_csv_string(&gradient.sensitivities.0))?;
            outputs.push(path);

            Ok(RunOutcome {
                exit_code: 0,
                outputs,
                summary: format!(
                    "forward: {} steps, objective = {:.7e}",
                    gradient.trace.n_steps(),
                    gradient.theta
                ),
            })
        }
        Mode::Verify => {
            let v = &cfg.verify;
            let report = verify_report(&problem, &rho, v.scheme, v.h, v.near_zero_rel)?;
            let path = out_dir.join("verification.csv");
            std::fs::write(&path, io::report_csv_string(&report))?;
            outputs.push(path);
            let passed = report.passes(v.gate);
            Ok(RunOutcome {
                exit_code: if passed { 0 } else { 3 },
                outputs,
                summary: format!(
                    "{report}gate {:.1e}: {}",
                    v.gate,
                    if passed { "PASS" } else { "FAIL" }
                ),
            })
        }
        Mode::Optimize => {
            let field = cfg.design_field(problem.mesh.n_elements());
            let opts = cfg.optimize_options(overrides.paranoid);
            let mesh = problem.mesh.clone();
            let dir = out_dir.clone();
            let mut snapshots = Vec::new();
            let (field, history) = optimize_loop(&problem, field, &opts, |iter, f, _theta| {
                let path = dir.join(format!("density_{iter:03}.vtk"));
                io::write_vtk(&path, &mesh, &format!("iteration {iter}"), None, Some(&f.rho))?;
                snapshots.push(path);
                Ok(())
            })?;
            outputs.extend(snapshots);

            let path = out_dir.join("history.csv");
            std::fs::write(&path, io::history_csv_string(&history))?;
            outputs.push(path);

            let last = history.0.last().map(|r| r.theta).unwrap_or(f64::NAN);
            Ok(RunOutcome {
                exit_code: 0,
                outputs,
                summary: format!(
                    "optimize: {} iterations, objective = {last:.7e}, volume = {:.4}",
                    history.0.len(),
                    field.volume()
                ),
            })
        }
        Mode::Bench => {
            let trace = problem.forward(&rho)?;
            let blocks = DerivativeBlocks::from_trace(&trace);
            let mut rows = Vec::new();
            for &span in &cfg.bench.spans {
                if span + 1 > trace.n_steps() || span > problem.sweep.recursion_cap {
                    log::warn!("bench: skipping span {span} (trace or cap too short)");
                    continue;
                }
                let secs = time_recursive_span(&problem.mesh, &trace, &blocks, span, problem.sweep.recursion_cap)?;
                rows.push(("recursive".to_string(), span + 1, 1, secs));
                let secs = time_memoized_span(&problem.mesh, &trace, &blocks, span)?;
                rows.push(("memoized".to_string(), span + 1, 1, secs));
            }
            for &m in &cfg.bench.sweep_steps {
                let schedule = resample_schedule(&problem.schedule, m);
                let mut p = problem.clone();
                p.schedule = schedule;
                p.objective.step = m;
                let trace = p.forward(&rho)?;
                let secs = time_memoized_sweep(&p, &trace, m)?;
                rows.push(("memoized-sweep".to_string(), m, 0, secs));
            }
            let path = out_dir.join("bench.csv");
            std::fs::write(&path, io::bench_csv_string(&rows))?;
            outputs.push(path);
            let summary = rows
                .iter()
                .map(|(mode, k, i, s)| format!("{mode} k={k} i={i}: {s:.6}s"))
                .collect::<Vec<_>>()
                .join("\n");
            Ok(RunOutcome {
                exit_code: 0,
                outputs,
                summary,
            })
        }
    }
}

/// Parses a mode name (CLI subcommand).
pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "forward" => Ok(Mode::Forward),
        "verify" => Ok(Mode::Verify),
        "optimize" => Ok(Mode::Optimize),
        "bench" => Ok(Mode::Bench),
        other => Err(Error::Config(format!("unknown mode `{other}`"))),
    }
}

/// Convenience entry point used by the binary: worker pool + run + exit code.
pub fn run_cli(config_path: &Path, mode: Mode, overrides: &Overrides) -> i32 {
    let cfg = match crate::config::parse_config(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let workers = overrides.workers.unwrap_or(cfg.solver.workers);
    let pool = match crate::worker_pool(workers) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    match pool.install(|| run_mode(&cfg, mode, overrides)) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for p in &outcome.outputs {
                log::info!("wrote {}", p.display());
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
