//! Batch run configuration: JSON schema, validation and defaulting.
//!
//! Unknown keys are rejected everywhere; every defaulted field is reported
//! so a run log contains the complete effective configuration.

use crate::adjoint::{CouplingMode, SweepOptions};
use crate::error::{Error, Result};
use crate::fea::{LinearSolverKind, SolverOptions};
use crate::fd::FdScheme;
use crate::material::PhaseParams;
use crate::mesh::{build_mesh, Axis, BcPreset, Mesh, PointLoad};
use crate::optimize::{DesignField, OptimizeOptions};
use crate::problem::{ObjectiveSpec, Problem};
use crate::schedule::Schedule;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    /// Domain size (m).
    pub lx: f64,
    pub ly: f64,
    pub bc: BcPreset,
    #[serde(default)]
    pub loads: Vec<PointLoad>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRef {
    pub ix: usize,
    pub iy: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub node: NodeRef,
    pub axis: Axis,
    /// 1-based objective step M.
    pub step: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// Uniform initial design value.
    pub initial_rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub linear: LinearSolverKind,
    pub tolerance: f64,
    pub coupling: CouplingMode,
    pub recursion_cap: usize,
    /// Worker-pool size; 0 = all available cores.
    pub workers: usize,
    /// Test hook: corrupts the coupling terms by this relative amount so the
    /// verification gate can be shown to catch a broken adjoint.
    pub coupling_perturbation: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            linear: LinearSolverKind::Direct,
            tolerance: 1e-10,
            coupling: CouplingMode::Memoized,
            recursion_cap: 10,
            workers: 0,
            coupling_perturbation: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub scheme: FdScheme,
    /// Base FD step; the per-element step is `h * max(rho_e, 0.1)`.
    pub h: f64,
    /// Rows with |FD| below this fraction of max |FD| are omitted from NE.
    pub near_zero_rel: f64,
    /// Pass/fail gate on the max normalized error.
    pub gate: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            scheme: FdScheme::Central,
            h: 1e-6,
            near_zero_rel: 1e-3,
            gate: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeConfig {
    pub vol_frac: f64,
    /// Filter radius in element widths.
    pub r_min: f64,
    pub move_limit: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub paranoid: bool,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            vol_frac: 0.3,
            r_min: 1.5,
            move_limit: 0.2,
            max_iters: 20,
            tol: 1e-3,
            paranoid: false,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    /// Coupling spans k - i to time in both modes.
    pub spans: Vec<usize>,
    /// Synthetic cycle lengths for the memoized-sweep scaling measurement.
    pub sweep_steps: Vec<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            spans: vec![2, 4, 6, 8],
            sweep_steps: vec![4, 8, 16, 32],
        }
    }
}

/// Full batch-run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub material: PhaseParams,
    pub schedule: Schedule,
    pub objective: ObjectiveConfig,
    pub design: DesignConfig,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default)]
    pub bench: Option<BenchConfig>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

/// A validated configuration with every default applied and recorded.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub raw: RunConfig,
    pub solver: SolverConfig,
    pub verify: VerifyConfig,
    pub optimize: OptimizeConfig,
    pub bench: BenchConfig,
    pub output_dir: String,
    /// Human-readable list of every field that fell back to its default.
    pub applied_defaults: Vec<String>,
}

/// Parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Parses and validates a configuration from a JSON string.
pub fn parse_config_str(text: &str) -> Result<ResolvedConfig> {
    let raw: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("schema error: {e}")))?;
    resolve(raw)
}

fn resolve(raw: RunConfig) -> Result<ResolvedConfig> {
    let mut applied_defaults = Vec::new();
    let mut defaulted = |name: &str, json: String| {
        applied_defaults.push(format!("{name} = {json} (default)"));
    };

    let solver = raw.solver.clone().unwrap_or_else(|| {
        let d = SolverConfig::default();
        defaulted("solver", serde_json::to_string(&d).unwrap());
        d
    });
    let verify = raw.verify.clone().unwrap_or_else(|| {
        let d = VerifyConfig::default();
        defaulted("verify", serde_json::to_string(&d).unwrap());
        d
    });
    let optimize = raw.optimize.clone().unwrap_or_else(|| {
        let d = OptimizeConfig::default();
        defaulted("optimize", serde_json::to_string(&d).unwrap());
        d
    });
    let bench = raw.bench.clone().unwrap_or_else(|| {
        let d = BenchConfig::default();
        defaulted("bench", serde_json::to_string(&d).unwrap());
        d
    });
    let output_dir = raw.output_dir.clone().unwrap_or_else(|| {
        defaulted("output_dir", "\"out\"".into());
        "out".to_string()
    });

    let resolved = ResolvedConfig {
        raw,
        solver,
        verify,
        optimize,
        bench,
        output_dir,
        applied_defaults,
    };
    validate(&resolved)?;
    Ok(resolved)
}

fn validate(cfg: &ResolvedConfig) -> Result<()> {
    let raw = &cfg.raw;
    raw.material.validate()?;
    raw.schedule.validate()?;

    // Cross references, checked before any compute.
    let mesh = cfg.build_mesh()?;
    let dof = mesh
        .dof_id(raw.objective.node.ix, raw.objective.node.iy, raw.objective.axis)
        .map_err(|_| {
            Error::Config(format!(
                "objective node ({}, {}) outside the {}x{} grid",
                raw.objective.node.ix, raw.objective.node.iy, raw.mesh.nx, raw.mesh.ny
            ))
        })?;
    if mesh.free_index[dof].is_none() {
        return Err(Error::Config(
            "objective dof lies on a fixed boundary".into(),
        ));
    }
    if raw.objective.step == 0 || raw.objective.step > raw.schedule.len() {
        return Err(Error::Config(format!(
            "objective step {} exceeds the schedule length {}",
            raw.objective.step,
            raw.schedule.len()
        )));
    }
    let rho0 = raw.design.initial_rho;
    if !(raw.material.rho_min..=1.0).contains(&rho0) {
        return Err(Error::Config(format!(
            "initial_rho {rho0} outside [{}, 1]",
            raw.material.rho_min
        )));
    }
    if !(raw.material.rho_min..=1.0).contains(&cfg.optimize.vol_frac) {
        return Err(Error::Config(format!(
            "vol_frac {} outside [{}, 1]",
            cfg.optimize.vol_frac, raw.material.rho_min
        )));
    }
    if cfg.optimize.r_min <= 0.0 {
        return Err(Error::Config("r_min must be positive".into()));
    }
    if !(cfg.verify.h > 0.0) {
        return Err(Error::Config("verify.h must be positive".into()));
    }
    Ok(())
}

impl ResolvedConfig {
    pub fn build_mesh(&self) -> Result<Mesh> {
        let m = &self.raw.mesh;
        build_mesh(m.nx, m.ny, m.lx, m.ly, m.bc, &m.loads)
    }

    /// Assembles the Problem bundle used by every run mode.
    pub fn problem(&self) -> Result<Problem> {
        let problem = Problem {
            mesh: self.build_mesh()?,
            schedule: self.raw.schedule.clone(),
            params: self.raw.material.clone(),
            objective: ObjectiveSpec {
                node_ix: self.raw.objective.node.ix,
                node_iy: self.raw.objective.node.iy,
                axis: self.raw.objective.axis,
                step: self.raw.objective.step,
            },
            solver: SolverOptions {
                linear: self.solver.linear,
                tolerance: self.solver.tolerance,
            },
            sweep: SweepOptions {
                mode: self.solver.coupling,
                recursion_cap: self.solver.recursion_cap,
                coupling_perturbation: self.solver.coupling_perturbation,
            },
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Initial design field sized to the mesh.
    pub fn design_field(&self, n_elements: usize) -> DesignField {
        DesignField::uniform(
            n_elements,
            self.raw.design.initial_rho,
            self.optimize.r_min,
            self.optimize.vol_frac,
        )
    }

    pub fn optimize_options(&self, paranoid_override: bool) -> OptimizeOptions {
        OptimizeOptions {
            max_iters: self.optimize.max_iters,
            tol: self.optimize.tol,
            move_limit: self.optimize.move_limit,
            paranoid: self.optimize.paranoid || paranoid_override,
            seed: self.optimize.seed,
        }
    }
}
