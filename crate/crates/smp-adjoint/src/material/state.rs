//! Implicit update of the per-quadrature-point strain history.
//!
//! Given the total strain at the new step, the rubbery strain solves
//! `D e_r = C` with
//!   C = e_total + phi_g A_g^-1 (-B_r e_ir + B_g e_ig)
//!       + (dt/eta_i) B_r e_ir - e_i - e_is - e_th
//! and the history fields then advance as
//!   e_g  = A_g^-1 (A_r e_r - B_r e_ir + B_g e_ig)
//!   e_ir' = H_r^-1 e_ir + (dt/eta_r) H_r^-1 K^r_neq e_r
//!   e_ig' = H_g^-1 e_ig + (dt/eta_g) H_g^-1 K^g_neq e_g
//!   e_i'  = e_i + (dt/eta_i) (A_r e_r - B_r e_ir)
//!   e_is' = e_is + dphi_g e_r
//! where unprimed history fields are the previous step's values.

use super::CoeffSet;
use crate::error::{Error, Result};
use crate::voigt::VoigtVec;

/// Strain state of one quadrature point after one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainHistory {
    /// Rubbery-phase strain.
    pub eps_r: VoigtVec,
    /// Glassy-phase strain.
    pub eps_g: VoigtVec,
    /// Rubbery viscous (inelastic) strain.
    pub eps_ir: VoigtVec,
    /// Glassy viscous (inelastic) strain.
    pub eps_ig: VoigtVec,
    /// Interface slip strain.
    pub eps_i: VoigtVec,
    /// Stored strain frozen into newly formed glassy phase.
    pub eps_is: VoigtVec,
    /// Thermal strain used at this step.
    pub eps_th: VoigtVec,
    /// Time-step index this state belongs to (0 = initial).
    pub step: usize,
}

impl StrainHistory {
    /// Initial state: all strains zero.
    pub fn initial() -> Self {
        Self {
            eps_r: VoigtVec::zeros(),
            eps_g: VoigtVec::zeros(),
            eps_ir: VoigtVec::zeros(),
            eps_ig: VoigtVec::zeros(),
            eps_i: VoigtVec::zeros(),
            eps_is: VoigtVec::zeros(),
            eps_th: VoigtVec::zeros(),
            step: 0,
        }
    }
}

/// The history-dependent part of `C` (everything except the total strain).
pub(crate) fn c_history_part(coeffs: &CoeffSet, prev: &StrainHistory, eps_th: &VoigtVec) -> VoigtVec {
    let f = &coeffs.fractions;
    f.phi_g * (coeffs.a_g_inv * (-(coeffs.b_r * prev.eps_ir) + coeffs.b_g * prev.eps_ig))
        + (coeffs.dt / coeffs.consts.eta_i) * (coeffs.b_r * prev.eps_ir)
        - prev.eps_i
        - prev.eps_is
        - eps_th
}

/// Mixture stress at the new step: `sigma = A_r e_r - B_r e_ir_prev`.
pub fn stress(coeffs: &CoeffSet, eps_r_new: &VoigtVec, prev: &StrainHistory) -> VoigtVec {
    coeffs.a_r * eps_r_new - coeffs.b_r * prev.eps_ir
}

/// Advances the strain history of one quadrature point.
pub fn state_update(
    coeffs: &CoeffSet,
    eps_total: &VoigtVec,
    prev: &StrainHistory,
    eps_th: &VoigtVec,
    step: usize,
) -> Result<StrainHistory> {
    if prev.step + 1 != step {
        return Err(Error::Contract(format!(
            "state_update: previous history is at step {}, expected {}",
            prev.step,
            step - 1
        )));
    }
    let c = eps_total + c_history_part(coeffs, prev, eps_th);
    let eps_r = coeffs.d_inv * c;
    let eps_g = coeffs.a_g_inv * (coeffs.a_r * eps_r - coeffs.b_r * prev.eps_ir + coeffs.b_g * prev.eps_ig);
    let visc_r = coeffs.dt / coeffs.consts.rubbery.eta;
    let visc_g = coeffs.dt / coeffs.consts.glassy.eta;
    let eps_ir = coeffs.h_r_inv * prev.eps_ir + visc_r * (coeffs.h_r_inv * (coeffs.consts.rubbery.k_neq * eps_r));
    let eps_ig = coeffs.h_g_inv * prev.eps_ig + visc_g * (coeffs.h_g_inv * (coeffs.consts.glassy.k_neq * eps_g));
    let eps_i = prev.eps_i + (coeffs.dt / coeffs.consts.eta_i) * stress(coeffs, &eps_r, prev);
    let eps_is = prev.eps_is + coeffs.fractions.dphi_g * eps_r;
    Ok(StrainHistory {
        eps_r,
        eps_g,
        eps_ir,
        eps_ig,
        eps_i,
        eps_is,
        eps_th: *eps_th,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::toy_params;
    use super::super::{build_coeffs, interpolate_phase, phase_fractions, thermal_strain};
    use super::*;
    use nalgebra::Matrix3;

    #[test]
    fn homogeneous_inputs_stay_zero() {
        let params = toy_params();
        let coeffs = build_coeffs(0.3, 330.0, 340.0, 1.0, &params).unwrap();
        let out = state_update(
            &coeffs,
            &VoigtVec::zeros(),
            &StrainHistory::initial(),
            &VoigtVec::zeros(),
            1,
        )
        .unwrap();
        assert_eq!(out.eps_r, VoigtVec::zeros());
        assert_eq!(out.eps_ir, VoigtVec::zeros());
        assert_eq!(out.eps_ig, VoigtVec::zeros());
        assert_eq!(out.eps_i, VoigtVec::zeros());
        assert_eq!(out.eps_is, VoigtVec::zeros());
    }

    #[test]
    fn frozen_time_limit_keeps_history() {
        // dt = 0 and dphi_g = 0: the inelastic fields pass through.
        let params = toy_params();
        let coeffs = build_coeffs(0.4, 330.0, 330.0, 0.0, &params).unwrap();
        let mut prev = StrainHistory::initial();
        prev.eps_ir = VoigtVec::new(1e-3, -2e-3, 5e-4);
        prev.eps_ig = VoigtVec::new(2e-3, 1e-3, -1e-4);
        prev.eps_i = VoigtVec::new(-1e-4, 3e-4, 2e-4);
        prev.eps_is = VoigtVec::new(4e-4, 4e-4, 0.0);
        let out = state_update(
            &coeffs,
            &VoigtVec::new(1e-3, 0.0, 0.0),
            &prev,
            &VoigtVec::zeros(),
            1,
        )
        .unwrap();
        assert!((out.eps_ir - prev.eps_ir).amax() < 1e-18);
        assert!((out.eps_ig - prev.eps_ig).amax() < 1e-18);
        assert!((out.eps_i - prev.eps_i).amax() < 1e-18);
        assert!((out.eps_is - prev.eps_is).amax() < 1e-18);
    }

    #[test]
    fn rubbery_strain_matches_independent_dense_solve() {
        // One step with a uniaxial total strain and a populated history:
        // e_r must solve D e_r = C where C is assembled independently here.
        let params = toy_params();
        let consts = interpolate_phase(0.3, &params).unwrap();
        let fractions = phase_fractions(315.0, 325.0, 0.3, &params);
        let coeffs = build_coeffs(0.3, 315.0, 325.0, 1.0, &params).unwrap();
        let eps_th = thermal_strain(315.0, 350.0, &fractions, &consts);

        let mut prev = StrainHistory::initial();
        prev.eps_ir = VoigtVec::new(2e-4, -1e-4, 3e-5);
        prev.eps_ig = VoigtVec::new(-5e-5, 8e-5, 1e-5);
        prev.eps_i = VoigtVec::new(1e-5, 1e-5, 0.0);
        prev.eps_is = VoigtVec::new(3e-5, -2e-5, 0.0);

        let eps_total = VoigtVec::new(1.5e-3, 0.0, 0.0);
        let out = state_update(&coeffs, &eps_total, &prev, &eps_th, 1).unwrap();

        // Independent assembly of C and a dense LU solve of D e_r = C.
        let c = eps_total
            + fractions.phi_g
                * (coeffs.a_g_inv * (-(coeffs.b_r * prev.eps_ir) + coeffs.b_g * prev.eps_ig))
            + (1.0 / consts.eta_i) * (coeffs.b_r * prev.eps_ir)
            - prev.eps_i
            - prev.eps_is
            - eps_th;
        let d: Matrix3<f64> = coeffs.d;
        let e_r_ref = d.lu().solve(&c).unwrap();
        assert!((out.eps_r - e_r_ref).amax() < 1e-14 * e_r_ref.amax().max(1e-12));
    }

    #[test]
    fn step_contract_enforced() {
        let params = toy_params();
        let coeffs = build_coeffs(0.3, 330.0, 340.0, 1.0, &params).unwrap();
        let prev = StrainHistory::initial();
        assert!(state_update(&coeffs, &VoigtVec::zeros(), &prev, &VoigtVec::zeros(), 2).is_err());
    }
}
