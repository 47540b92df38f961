//! Problem bundle: mesh, schedule, material and objective wired together.

use crate::adjoint::{
    accumulate_sensitivity, adjoint_sweep, AdjointState, SensitivityVector, SweepOptions,
};
use crate::error::{Error, Result};
use crate::fea::{objective, objective_selector, run_cycle, ForwardTrace, SolverOptions};
use crate::material::PhaseParams;
use crate::mesh::{Axis, Mesh};
use crate::schedule::Schedule;

/// Objective specification: one displacement dof at one step.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveSpec {
    pub node_ix: usize,
    pub node_iy: usize,
    pub axis: Axis,
    /// 1-based step index M.
    pub step: usize,
}

/// A fully specified sensitivity problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mesh: Mesh,
    pub schedule: Schedule,
    pub params: PhaseParams,
    pub objective: ObjectiveSpec,
    pub solver: SolverOptions,
    pub sweep: SweepOptions,
}

/// Result of one full forward + adjoint evaluation.
pub struct Gradient {
    pub trace: ForwardTrace,
    pub adjoint: AdjointState,
    pub sensitivities: SensitivityVector,
    pub theta: f64,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.schedule.validate()?;
        if self.objective.step == 0 || self.objective.step > self.schedule.len() {
            return Err(Error::Config(format!(
                "objective step {} outside 1..={}",
                self.objective.step,
                self.schedule.len()
            )));
        }
        let dof = self.objective_dof()?;
        if self.mesh.free_index[dof].is_none() {
            return Err(Error::Config(
                "objective dof lies on a fixed boundary".into(),
            ));
        }
        Ok(())
    }

    pub fn objective_dof(&self) -> Result<usize> {
        self.mesh
            .dof_id(self.objective.node_ix, self.objective.node_iy, self.objective.axis)
    }

    /// Forward analysis over the full schedule.
    pub fn forward(&self, rho: &[f64]) -> Result<ForwardTrace> {
        run_cycle(&self.mesh, rho, &self.schedule, &self.params, &self.solver)
    }

    /// Objective value only; runs the schedule truncated at the objective
    /// step (later steps cannot influence it).
    pub fn theta(&self, rho: &[f64]) -> Result<f64> {
        let schedule = self.schedule.truncated(self.objective.step);
        let trace = run_cycle(&self.mesh, rho, &schedule, &self.params, &self.solver)?;
        objective(&trace, self.objective_dof()?, self.objective.step)
    }

    /// Forward + adjoint: objective, adjoint vectors and the full
    /// sensitivity vector.
    pub fn gradient(&self, rho: &[f64]) -> Result<Gradient> {
        let trace = self.forward(rho)?;
        self.gradient_from_trace(trace)
    }

    /// Adjoint pipeline on an existing trace.
    pub fn gradient_from_trace(&self, trace: ForwardTrace) -> Result<Gradient> {
        let dof = self.objective_dof()?;
        let m = self.objective.step;
        let theta = objective(&trace, dof, m)?;
        let l = objective_selector(&self.mesh, dof)?;
        let adjoint = adjoint_sweep(&self.mesh, &trace, &l, m, &self.sweep)?;
        let sensitivities = accumulate_sensitivity(&self.mesh, &trace, &self.params, &adjoint)?;
        Ok(Gradient {
            trace,
            adjoint,
            sensitivities,
            theta,
        })
    }
}
