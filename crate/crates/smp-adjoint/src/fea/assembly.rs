//! Element-partitioned assembly of the step tangent and history load.
//!
//! The step residual is affine in the unknown displacement:
//!   R(u) = K_t u - F_hist - F_ext
//! with
//!   K_t     = sum_e int B^T (A_r D^-1) B dv
//!   F_hist  = -sum_e int B^T (A_r D^-1 c_hist - B_r e_ir_prev) dv
//! where `c_hist` is the history part of the constitutive right-hand side.
//! Element contributions are computed in parallel and merged in fixed
//! element order, so assembly is bitwise deterministic for any worker count.

use crate::material::{c_history_part, CoeffSet, StrainHistory};
use crate::mesh::{element_b_all, Mesh};
use crate::voigt::VoigtVec;
use crate::Result;
use nalgebra::{DVector, SMatrix, SVector};
use nalgebra_sparse::{CooMatrix, CscMatrix};
use rayon::prelude::*;

/// Assembled free-dof system of one time step.
pub struct AssembledSystem {
    /// Tangent on free dofs.
    pub k: CscMatrix<f64>,
    /// Right-hand side `F_hist + F_ext` on free dofs.
    pub f: DVector<f64>,
}

/// One element's local tangent and history load.
pub fn element_system(
    mesh: &Mesh,
    elem: usize,
    coeffs: &CoeffSet,
    hist_prev: &[StrainHistory],
    eps_th: &VoigtVec,
) -> Result<(SMatrix<f64, 8, 8>, SVector<f64, 8>)> {
    let bms = element_b_all(mesh, elem)?;
    let mut ke = SMatrix::<f64, 8, 8>::zeros();
    let mut fe = SVector::<f64, 8>::zeros();
    let modulus = coeffs.a_r * coeffs.d_inv;
    for (gp, bm) in bms.iter().enumerate() {
        ke += bm.w_detj * bm.b.transpose() * modulus * bm.b;
        let c_hist = c_history_part(coeffs, &hist_prev[gp], eps_th);
        let sigma_hist = modulus * c_hist - coeffs.b_r * hist_prev[gp].eps_ir;
        fe -= bm.w_detj * bm.b.transpose() * sigma_hist;
    }
    Ok((ke, fe))
}

/// Assembles the tangent matrix and total load vector on the free dofs.
pub fn assemble_system(
    mesh: &Mesh,
    coeffs: &[CoeffSet],
    hist_prev: &[Vec<StrainHistory>],
    eps_th: &[VoigtVec],
    f_ext: &DVector<f64>,
) -> Result<AssembledSystem> {
    let locals: Vec<Result<(SMatrix<f64, 8, 8>, SVector<f64, 8>)>> = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| element_system(mesh, e, &coeffs[e], &hist_prev[e], &eps_th[e]))
        .collect();

    let n_free = mesh.n_free();
    let mut coo = CooMatrix::new(n_free, n_free);
    let mut f = DVector::zeros(n_free);
    for (e, local) in locals.into_iter().enumerate() {
        let (ke, fe) = local?;
        let dofs = mesh.element_dofs(e);
        for (l, dl) in dofs.iter().enumerate() {
            let Some(gl) = mesh.free_index[*dl] else {
                continue;
            };
            f[gl] += fe[l];
            for (m, dm) in dofs.iter().enumerate() {
                if let Some(gm) = mesh.free_index[*dm] {
                    coo.push(gl, gm, ke[(l, m)]);
                }
            }
        }
    }
    for (free, &full) in mesh.free_dofs.iter().enumerate() {
        f[free] += f_ext[full];
    }
    Ok(AssembledSystem {
        k: CscMatrix::from(&coo),
        f,
    })
}

/// Full-dof external force vector for a load scale.
pub fn external_force(mesh: &Mesh, load_scale: f64) -> DVector<f64> {
    let mut f = DVector::zeros(mesh.n_dofs());
    for (dof, value) in &mesh.ref_loads {
        f[*dof] += load_scale * value;
    }
    f
}

/// Euclidean norm of `K u - F` for an assembled step at displacement `u`
/// (free-dof vector).
pub fn residual_norm(system: &AssembledSystem, u: &DVector<f64>) -> f64 {
    (&system.k * u - &system.f).norm()
}
