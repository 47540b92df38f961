//! Time-dependent adjoint sensitivity analysis.
//!
//! The backward sweep solves the transposed step tangents for the adjoint
//! vectors: the final one from the objective selector, the intermediate ones
//! from the accumulated time-coupling terms,
//!
//!   K_M^T lambda_M = -L
//!   K_i^T lambda_i = -sum_{k > i} (dR^k/du^i)^T lambda_k
//!
//! and the total design derivative follows as
//!
//!   d(theta)/d(rho_e) = sum_i lambda_i^T dR^i/d(rho_e).

mod blocks;
mod coupling;

pub use blocks::{DerivativeBlocks, StepBlocks};
pub use coupling::{
    coupling_memoized, coupling_recursive, CouplingCache, CouplingMode, Field, Tracer,
};

use crate::error::{Error, Result};
use crate::fea::{assemble_system, AssembledSystem, ForwardTrace, StepSolver};
use crate::material::{
    coeff_sensitivity, rubbery_strain_sensitivity, state_sensitivity,
    thermal_strain_rho_derivative, PhaseParams, StrainHistorySens,
};
use crate::mesh::{element_b_all, Mesh};
use nalgebra::{DVector, SVector};
use nalgebra_sparse::CscMatrix;
use rayon::prelude::*;

/// Adjoint vectors of a sweep. `lambdas[i]` (1-based) is the adjoint state
/// of time step `i` as a full dof vector (zeros on fixed dofs).
#[derive(Debug, Clone)]
pub struct AdjointState {
    pub lambdas: Vec<DVector<f64>>,
    /// Objective step the sweep was seeded at.
    pub m: usize,
}

impl AdjointState {
    pub fn lambda(&self, i: usize) -> &DVector<f64> {
        &self.lambdas[i]
    }
}

/// Per-element total sensitivities d(theta)/d(rho_e).
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityVector(pub Vec<f64>);

/// Step tangent dR^i/du^i with boundary conditions applied: re-assembles the
/// recorded step through the forward assembly path.
pub fn residual_dof_jacobian(mesh: &Mesh, trace: &ForwardTrace, i: usize) -> Result<AssembledSystem> {
    if i == 0 || i > trace.n_steps() {
        return Err(Error::Contract(format!(
            "residual jacobian: step {i} outside 1..={}",
            trace.n_steps()
        )));
    }
    let rec = &trace.records[i];
    assemble_system(
        mesh,
        &rec.coeffs,
        &trace.records[i - 1].histories,
        &rec.eps_th,
        &rec.f_ext,
    )
}

fn expand_to_full(mesh: &Mesh, free: &DVector<f64>) -> DVector<f64> {
    let mut full = DVector::zeros(mesh.n_dofs());
    for (fi, &fd) in mesh.free_dofs.iter().enumerate() {
        full[fd] = free[fi];
    }
    full
}

/// Final adjoint vector: solves K_M^T lambda = -L on the free dofs.
pub fn solve_final_adjoint(
    mesh: &Mesh,
    trace: &ForwardTrace,
    l: &DVector<f64>,
    m: usize,
) -> Result<DVector<f64>> {
    let system = residual_dof_jacobian(mesh, trace, m)?;
    let kt = system.k.transpose();
    let solver = StepSolver::new(&kt, trace.solver.linear, trace.solver.tolerance)?;
    let (lambda, _) = solver.solve(&(-l))?;
    Ok(expand_to_full(mesh, &lambda))
}

fn gather_element(mesh: &Mesh, elem: usize, v: &DVector<f64>) -> SVector<f64, 8> {
    let dofs = mesh.element_dofs(elem);
    SVector::<f64, 8>::from_fn(|l, _| v[dofs[l]])
}

/// Options of the backward sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub mode: CouplingMode,
    /// Maximum span k - i the recursive mode may trace.
    pub recursion_cap: usize,
    /// Test hook: scales every coupling block by (1 + value). A deliberate
    /// corruption that the verification gate must catch; `None` in normal
    /// operation.
    pub coupling_perturbation: Option<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            mode: CouplingMode::Memoized,
            recursion_cap: 10,
            coupling_perturbation: None,
        }
    }
}

/// Full backward sweep producing every adjoint vector from step `m` down to
/// step 1. The k-accumulation is parallel over elements with a fixed-order
/// reduction; results are bitwise independent of the worker count.
pub fn adjoint_sweep(
    mesh: &Mesh,
    trace: &ForwardTrace,
    l: &DVector<f64>,
    m: usize,
    opts: &SweepOptions,
) -> Result<AdjointState> {
    if m == 0 || m > trace.n_steps() {
        return Err(Error::Contract(format!(
            "adjoint sweep: objective step {m} outside 1..={}",
            trace.n_steps()
        )));
    }
    let corruption = opts.coupling_perturbation.map_or(1.0, |p| 1.0 + p);
    let blocks = DerivativeBlocks::from_trace(trace);
    let mut lambdas = vec![DVector::zeros(mesh.n_dofs()); m + 1];
    lambdas[m] = solve_final_adjoint(mesh, trace, l, m)?;

    for i in (1..m).rev() {
        // F_RHS = -sum_{k=i+1..m} (dR^k/du^i)^T lambda_k, element-local.
        let contribs: Vec<Result<SVector<f64, 8>>> = (0..mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let mut cache = CouplingCache::new();
                let mut acc = SVector::<f64, 8>::zeros();
                for k in (i + 1)..=m {
                    let block = match opts.mode {
                        CouplingMode::Recursive => {
                            coupling_recursive(mesh, trace, &blocks, k, i, e, opts.recursion_cap)?
                        }
                        CouplingMode::Memoized => {
                            coupling_memoized(mesh, trace, &blocks, k, i, e, &mut cache)?
                        }
                    };
                    let lambda_e = gather_element(mesh, e, &lambdas[k]);
                    acc -= corruption * (block.transpose() * lambda_e);
                }
                Ok(acc)
            })
            .collect();

        let mut f_rhs = DVector::zeros(mesh.n_free());
        for (e, c) in contribs.into_iter().enumerate() {
            let c = c?;
            for (local, dof) in mesh.element_dofs(e).iter().enumerate() {
                if let Some(free) = mesh.free_index[*dof] {
                    f_rhs[free] += c[local];
                }
            }
        }

        let system = residual_dof_jacobian(mesh, trace, i)?;
        let kt = system.k.transpose();
        let solver = StepSolver::new(&kt, trace.solver.linear, trace.solver.tolerance)
            .map_err(|e| Error::Solver(format!("adjoint step {i}: {e}")))?;
        let (lambda, _) = solver
            .solve(&f_rhs)
            .map_err(|e| Error::Solver(format!("adjoint step {i}: {e}")))?;
        lambdas[i] = expand_to_full(mesh, &lambda);
    }

    Ok(AdjointState { lambdas, m })
}

/// Walks one element's explicit-sensitivity chain up to step `upto`,
/// calling `visit(i, dR^i/drho_e)` for each step.
fn walk_rho_partials<F: FnMut(usize, &SVector<f64, 8>)>(
    mesh: &Mesh,
    trace: &ForwardTrace,
    params: &PhaseParams,
    elem: usize,
    upto: usize,
    mut visit: F,
) -> Result<()> {
    let bms = element_b_all(mesh, elem)?;
    let mut prev_sens: Vec<StrainHistorySens> =
        (0..4).map(|_| StrainHistorySens::initial()).collect();
    for i in 1..=upto {
        let rec = &trace.records[i];
        let coeffs = &rec.coeffs[elem];
        let sens = coeff_sensitivity(coeffs, params);
        let d_eps_th = thermal_strain_rho_derivative(
            rec.temperature,
            trace.t_ref,
            &coeffs.fractions,
            &coeffs.consts,
        );
        let prev_hist = &trace.records[i - 1].histories[elem];
        let hist = &rec.histories[elem];

        let mut partial = SVector::<f64, 8>::zeros();
        let mut next_sens = Vec::with_capacity(4);
        for (gp, bm) in bms.iter().enumerate() {
            let d_eps_r = rubbery_strain_sensitivity(
                coeffs,
                &sens,
                &prev_hist[gp],
                &prev_sens[gp],
                &hist[gp].eps_r,
                &d_eps_th,
            );
            // d(sigma)/d(rho) = dA_r e_r + A_r de_r - dB_r e_ir_prev - B_r de_ir_prev
            let d_sigma = sens.d_a_r * hist[gp].eps_r + coeffs.a_r * d_eps_r
                - sens.d_b_r * prev_hist[gp].eps_ir
                - coeffs.b_r * prev_sens[gp].d_eps_ir;
            partial += bm.w_detj * bm.b.transpose() * d_sigma;
            next_sens.push(state_sensitivity(
                coeffs,
                &sens,
                &prev_hist[gp],
                &prev_sens[gp],
                &hist[gp].eps_r,
                &d_eps_r,
                i,
            )?);
        }
        visit(i, &partial);
        prev_sens = next_sens;
    }
    Ok(())
}

/// Explicit design derivative of one step's residual restricted to one
/// element's dofs: dR^i/d(rho_e). External loads are design-independent, so
/// the dF_ext/d(rho) term is structurally present but zero.
pub fn residual_rho_partial(
    mesh: &Mesh,
    trace: &ForwardTrace,
    params: &PhaseParams,
    i: usize,
    elem: usize,
) -> Result<SVector<f64, 8>> {
    if i == 0 || i > trace.n_steps() {
        return Err(Error::Contract(format!(
            "residual rho partial: step {i} outside 1..={}",
            trace.n_steps()
        )));
    }
    let mut out = SVector::<f64, 8>::zeros();
    walk_rho_partials(mesh, trace, params, elem, i, |j, partial| {
        if j == i {
            out = *partial;
        }
    })?;
    Ok(out)
}

/// Accumulates the total sensitivities d(theta)/d(rho_e) from the adjoint
/// vectors (the objective has no explicit rho dependence, so the partial
/// d(theta)/d(rho) term is zero for the displacement objective).
pub fn accumulate_sensitivity(
    mesh: &Mesh,
    trace: &ForwardTrace,
    params: &PhaseParams,
    adjoint: &AdjointState,
) -> Result<SensitivityVector> {
    let values: Vec<Result<f64>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let mut total = 0.0;
            walk_rho_partials(mesh, trace, params, e, adjoint.m, |i, partial| {
                let lambda_e = gather_element(mesh, e, &adjoint.lambdas[i]);
                total += lambda_e.dot(partial);
            })?;
            Ok(total)
        })
        .collect();
    let mut out = Vec::with_capacity(values.len());
    for v in values {
        out.push(v?);
    }
    Ok(SensitivityVector(out))
}

/// Bound for the Lagrangian identity |Theta - theta|: the sum of
/// ||lambda_i|| * ||R_i|| over the swept steps, using the solver's achieved
/// residual norms.
pub fn lagrangian_bound(trace: &ForwardTrace, adjoint: &AdjointState) -> f64 {
    (1..=adjoint.m)
        .map(|i| adjoint.lambdas[i].norm() * trace.records[i].residual_norm)
        .sum()
}

/// Transposed-system coupling matrix check helper: returns the full sparse
/// transpose of a step tangent (exposed for tests of the transpose-solve
/// identity).
pub fn step_tangent_transpose(mesh: &Mesh, trace: &ForwardTrace, i: usize) -> Result<CscMatrix<f64>> {
    Ok(residual_dof_jacobian(mesh, trace, i)?.k.transpose())
}
