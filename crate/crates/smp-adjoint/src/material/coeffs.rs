//! Per-step coefficient tensors of the implicit SMP update.
//!
//! For each phase p in {r, g}:
//!   H_p = I + (dt/eta_p) K^p_neq
//!   B_p = H_p^-1 K^p_neq
//!   A_p = K^p_neq + K^p_eq - (dt/eta_p) K^p_neq H_p^-1 K^p_neq
//! and the mixture operator
//!   D = (phi_r + dphi_g) I + phi_g A_g^-1 A_r + (dt/eta_i) A_r
//! with the assembled-residual coefficients
//!   X_r = A_r D^-1 phi_g A_g^-1 B_r      X_g = A_r D^-1 phi_g A_g^-1 B_g
//!   Y_r = A_r D^-1 (dt/eta_i) B_r        V = Z = A_r D^-1

use super::{interpolate_phase, phase_fractions, InterpolatedConstants, PhaseFractions, PhaseParams};
use crate::error::Result;
use crate::voigt::{try_invert, VoigtMat};

/// Coefficient tensors for one element at one time step.
#[derive(Debug, Clone)]
pub struct CoeffSet {
    pub a_r: VoigtMat,
    pub a_g: VoigtMat,
    pub a_g_inv: VoigtMat,
    pub b_r: VoigtMat,
    pub b_g: VoigtMat,
    pub h_r: VoigtMat,
    pub h_g: VoigtMat,
    pub h_r_inv: VoigtMat,
    pub h_g_inv: VoigtMat,
    pub d: VoigtMat,
    pub d_inv: VoigtMat,
    pub x_r: VoigtMat,
    pub x_g: VoigtMat,
    pub y_r: VoigtMat,
    pub v: VoigtMat,
    pub z: VoigtMat,
    pub dt: f64,
    pub fractions: PhaseFractions,
    pub consts: InterpolatedConstants,
}

/// Builds the full coefficient set at design value `rho` for a step of
/// length `dt` ending at temperature `t_now`.
pub fn build_coeffs(
    rho: f64,
    t_now: f64,
    t_prev: f64,
    dt: f64,
    params: &PhaseParams,
) -> Result<CoeffSet> {
    let consts = interpolate_phase(rho, params)?;
    let fractions = phase_fractions(t_now, t_prev, rho, params);
    build_coeffs_from_parts(consts, fractions, dt)
}

/// Same as [`build_coeffs`] but from already-interpolated constants, used by
/// tests that exercise specific limits (dt = 0, single phase, ...).
pub fn build_coeffs_from_parts(
    consts: InterpolatedConstants,
    fractions: PhaseFractions,
    dt: f64,
) -> Result<CoeffSet> {
    let id = VoigtMat::identity();

    let h_r = id + (dt / consts.rubbery.eta) * consts.rubbery.k_neq;
    let h_g = id + (dt / consts.glassy.eta) * consts.glassy.k_neq;
    let h_r_inv = try_invert(&h_r, "H_r")?;
    let h_g_inv = try_invert(&h_g, "H_g")?;

    let b_r = h_r_inv * consts.rubbery.k_neq;
    let b_g = h_g_inv * consts.glassy.k_neq;

    let a_r = consts.rubbery.k_neq + consts.rubbery.k_eq
        - (dt / consts.rubbery.eta) * consts.rubbery.k_neq * h_r_inv * consts.rubbery.k_neq;
    let a_g = consts.glassy.k_neq + consts.glassy.k_eq
        - (dt / consts.glassy.eta) * consts.glassy.k_neq * h_g_inv * consts.glassy.k_neq;
    let a_g_inv = try_invert(&a_g, "A_g")?;

    let d = (fractions.phi_r + fractions.dphi_g) * id
        + fractions.phi_g * a_g_inv * a_r
        + (dt / consts.eta_i) * a_r;
    let d_inv = try_invert(&d, "D")?;

    let x_r = a_r * d_inv * fractions.phi_g * a_g_inv * b_r;
    let x_g = a_r * d_inv * fractions.phi_g * a_g_inv * b_g;
    let y_r = a_r * d_inv * (dt / consts.eta_i) * b_r;
    let v = a_r * d_inv;
    let z = a_r * d_inv;

    Ok(CoeffSet {
        a_r,
        a_g,
        a_g_inv,
        b_r,
        b_g,
        h_r,
        h_g,
        h_r_inv,
        h_g_inv,
        d,
        d_inv,
        x_r,
        x_g,
        y_r,
        v,
        z,
        dt,
        fractions,
        consts,
    })
}

impl CoeffSet {
    /// Largest relative deviation between the stored composite tensors and a
    /// fresh re-composition from their factors. Used as a consistency check.
    pub fn recomposition_error(&self) -> f64 {
        let x_r = self.a_r * self.d_inv * self.fractions.phi_g * self.a_g_inv * self.b_r;
        let x_g = self.a_r * self.d_inv * self.fractions.phi_g * self.a_g_inv * self.b_g;
        let y_r = self.a_r * self.d_inv * (self.dt / self.consts.eta_i) * self.b_r;
        let v = self.a_r * self.d_inv;
        let rel = |a: &VoigtMat, b: &VoigtMat| {
            let scale = a.amax().max(b.amax());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).amax() / scale
            }
        };
        rel(&x_r, &self.x_r)
            .max(rel(&x_g, &self.x_g))
            .max(rel(&y_r, &self.y_r))
            .max(rel(&v, &self.v))
            .max(rel(&v, &self.z))
    }
}
