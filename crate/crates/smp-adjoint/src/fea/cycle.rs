//! Forward analysis of the thermo-mechanical cycle.
//!
//! Each step assembles the affine residual, performs the single linear solve
//! (the residual is affine in the step displacement, so one Newton iteration
//! is exact and the post-solve residual check is the convergence assertion),
//! updates the quadrature-point histories, and records everything the
//! adjoint sweep needs.

use super::assembly::{assemble_system, external_force};
use super::solve::{LinearSolverKind, StepSolver};
use crate::error::{Error, Result};
use crate::material::{
    build_coeffs, interpolate_phase, phase_fractions, state_update, thermal_strain, CoeffSet,
    PhaseParams, StrainHistory,
};
use crate::mesh::{element_b_all, Mesh};
use crate::schedule::Schedule;
use crate::voigt::VoigtVec;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Options for the per-step linear solves.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub linear: LinearSolverKind,
    /// Relative residual tolerance each stored step must satisfy.
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            linear: LinearSolverKind::Direct,
            tolerance: 1e-10,
        }
    }
}

/// Everything recorded about one time step of the forward run.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Displacement, full dof vector (fixed dofs zero).
    pub u: DVector<f64>,
    /// Strain history per element and quadrature point after this step.
    pub histories: Vec<Vec<StrainHistory>>,
    /// Coefficient tensors per element (empty at the initial record).
    pub coeffs: Vec<CoeffSet>,
    /// Thermal strain per element (empty at the initial record).
    pub eps_th: Vec<VoigtVec>,
    /// External force, full dof vector.
    pub f_ext: DVector<f64>,
    /// Achieved absolute residual norm of the step solve.
    pub residual_norm: f64,
    pub temperature: f64,
    pub load_scale: f64,
}

/// Time-indexed record of the full forward analysis; index 0 is the initial
/// state, indices 1..=M are solved steps.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub records: Vec<StepRecord>,
    pub solver: SolverOptions,
    /// Stress-free reference temperature of the schedule.
    pub t_ref: f64,
}

impl ForwardTrace {
    /// Number of solved steps.
    pub fn n_steps(&self) -> usize {
        self.records.len() - 1
    }

    pub fn step(&self, i: usize) -> Result<&StepRecord> {
        self.records
            .get(i)
            .ok_or_else(|| Error::Contract(format!("trace has no step {i}")))
    }
}

/// Runs the full schedule, returning the forward trace.
pub fn run_cycle(
    mesh: &Mesh,
    rho: &[f64],
    schedule: &Schedule,
    params: &PhaseParams,
    opts: &SolverOptions,
) -> Result<ForwardTrace> {
    schedule.validate()?;
    params.validate()?;
    if rho.len() != mesh.n_elements() {
        return Err(Error::Contract(format!(
            "design field has {} entries for {} elements",
            rho.len(),
            mesh.n_elements()
        )));
    }

    let n_elem = mesh.n_elements();
    let initial = StepRecord {
        u: DVector::zeros(mesh.n_dofs()),
        histories: (0..n_elem)
            .map(|_| (0..4).map(|_| StrainHistory::initial()).collect())
            .collect(),
        coeffs: Vec::new(),
        eps_th: Vec::new(),
        f_ext: DVector::zeros(mesh.n_dofs()),
        residual_norm: 0.0,
        temperature: schedule.t_initial,
        load_scale: 0.0,
    };
    let mut records = vec![initial];

    for i in 1..=schedule.len() {
        let step = &schedule.steps[i - 1];
        let t_now = schedule.temperature_at(i);
        let t_prev = schedule.temperature_at(i - 1);

        let per_element: Vec<Result<(CoeffSet, VoigtVec)>> = (0..n_elem)
            .into_par_iter()
            .map(|e| {
                let coeffs = build_coeffs(rho[e], t_now, t_prev, step.dt, params)?;
                let consts = interpolate_phase(rho[e], params)?;
                let fr = phase_fractions(t_now, t_prev, rho[e], params);
                let eps_th = thermal_strain(t_now, schedule.t_ref, &fr, &consts);
                Ok((coeffs, eps_th))
            })
            .collect();
        let mut coeffs = Vec::with_capacity(n_elem);
        let mut eps_th = Vec::with_capacity(n_elem);
        for r in per_element {
            let (c, t) = r.map_err(|e| Error::Solver(format!("step {i}: {e}")))?;
            coeffs.push(c);
            eps_th.push(t);
        }

        let f_ext = external_force(mesh, step.load_scale);
        let prev_hist = &records[i - 1].histories;
        let system = assemble_system(mesh, &coeffs, prev_hist, &eps_th, &f_ext)?;
        let solver = StepSolver::new(&system.k, opts.linear, opts.tolerance)
            .map_err(|e| Error::Solver(format!("step {i}: {e}")))?;
        let (u_free, residual_norm) = solver
            .solve(&system.f)
            .map_err(|e| Error::Solver(format!("step {i}: {e}")))?;

        let mut u = DVector::zeros(mesh.n_dofs());
        for (free, &full) in mesh.free_dofs.iter().enumerate() {
            u[full] = u_free[free];
        }

        let histories: Vec<Result<Vec<StrainHistory>>> = (0..n_elem)
            .into_par_iter()
            .map(|e| {
                let bms = element_b_all(mesh, e)?;
                let mut out = Vec::with_capacity(4);
                for (gp, bm) in bms.iter().enumerate() {
                    let eps_total = mesh.strain_at(e, bm, &u);
                    out.push(state_update(
                        &coeffs[e],
                        &eps_total,
                        &prev_hist[e][gp],
                        &eps_th[e],
                        i,
                    )?);
                }
                Ok(out)
            })
            .collect();
        let histories: Result<Vec<_>> = histories.into_iter().collect();

        records.push(StepRecord {
            u,
            histories: histories.map_err(|e| Error::Solver(format!("step {i}: {e}")))?,
            coeffs,
            eps_th,
            f_ext,
            residual_norm,
            temperature: t_now,
            load_scale: step.load_scale,
        });
    }

    Ok(ForwardTrace {
        records,
        solver: *opts,
        t_ref: schedule.t_ref,
    })
}

/// Scalar objective `theta = u^M[a]`: displacement of one dof at step `m`.
pub fn objective(trace: &ForwardTrace, dof: usize, m: usize) -> Result<f64> {
    let rec = trace.step(m)?;
    if m == 0 || m > trace.n_steps() {
        return Err(Error::Contract(format!(
            "objective step {m} outside 1..={}",
            trace.n_steps()
        )));
    }
    if dof >= rec.u.len() {
        return Err(Error::Contract(format!("objective dof {dof} out of range")));
    }
    Ok(rec.u[dof])
}

/// One-hot selector of the objective dof on the free dofs (the adjoint seed).
pub fn objective_selector(mesh: &Mesh, dof: usize) -> Result<DVector<f64>> {
    let free = mesh
        .free_index
        .get(dof)
        .copied()
        .flatten()
        .ok_or_else(|| Error::Contract(format!("objective dof {dof} is fixed or out of range")))?;
    let mut l = DVector::zeros(mesh.n_free());
    l[free] = 1.0;
    Ok(l)
}
