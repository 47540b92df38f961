//! Explicit derivatives of the constitutive update with respect to the
//! per-element design variable `rho`.
//!
//! Every formula here is the exact derivative of the corresponding forward
//! expression in `coeffs`/`state`, holding the total strain fixed (the
//! implicit dependence through the displacement solution is handled by the
//! adjoint sweep, not here). Each is verified against central finite
//! differences of the forward path in the test suite.

use super::{CoeffSet, InterpolatedConstants, PhaseFractions, PhaseParams, StrainHistory};
use crate::error::{Error, Result};
use crate::voigt::{hydrostatic, VoigtMat, VoigtVec};

/// rho-derivatives of the per-step coefficient tensors and their primitive
/// inputs for one element.
#[derive(Debug, Clone)]
pub struct CoeffSensitivity {
    pub d_a_r: VoigtMat,
    pub d_a_g: VoigtMat,
    pub d_b_r: VoigtMat,
    pub d_b_g: VoigtMat,
    pub d_h_r: VoigtMat,
    pub d_h_g: VoigtMat,
    pub d_d: VoigtMat,
    pub d_k_eq_r: VoigtMat,
    pub d_k_neq_r: VoigtMat,
    pub d_k_eq_g: VoigtMat,
    pub d_k_neq_g: VoigtMat,
    pub d_eta_r: f64,
    pub d_eta_g: f64,
    pub d_eta_i: f64,
    pub d_phi_g: f64,
    pub d_phi_r: f64,
    pub d_dphi_g: f64,
}

struct PhaseDerivs {
    d_h: VoigtMat,
    d_b: VoigtMat,
    d_a: VoigtMat,
}

/// One phase's dH, dB, dA from its primitives:
///   dH = (dt/eta) dK_neq - (dt/eta^2) deta K_neq
///   dB = -H^-1 dH H^-1 K_neq + H^-1 dK_neq
///   dA = dK_neq + dK_eq - (dt/eta) dK_neq H^-1 K_neq
///        + (dt/eta) K_neq H^-1 dH H^-1 K_neq - (dt/eta) K_neq H^-1 dK_neq
///        + (dt/eta^2) deta K_neq H^-1 K_neq
fn phase_derivs(
    k_neq: &VoigtMat,
    d_k_eq: &VoigtMat,
    d_k_neq: &VoigtMat,
    eta: f64,
    d_eta: f64,
    h_inv: &VoigtMat,
    dt: f64,
) -> PhaseDerivs {
    let r = dt / eta;
    let d_h = r * d_k_neq - (r / eta) * d_eta * k_neq;
    let d_b = -h_inv * d_h * h_inv * k_neq + h_inv * d_k_neq;
    let d_a = d_k_neq + d_k_eq - r * d_k_neq * h_inv * k_neq + r * k_neq * h_inv * d_h * h_inv * k_neq
        - r * k_neq * h_inv * d_k_neq
        + (r / eta) * d_eta * k_neq * h_inv * k_neq;
    PhaseDerivs { d_h, d_b, d_a }
}

/// Differentiates the coefficient set of [`super::build_coeffs`] with
/// respect to `rho`, using the primitive derivatives already carried by the
/// set's interpolated constants.
pub fn coeff_sensitivity(coeffs: &CoeffSet, _params: &PhaseParams) -> CoeffSensitivity {
    let c = &coeffs.consts;
    let f = &coeffs.fractions;
    let dt = coeffs.dt;

    let r = phase_derivs(
        &c.rubbery.k_neq,
        &c.rubbery.d_k_eq,
        &c.rubbery.d_k_neq,
        c.rubbery.eta,
        c.rubbery.d_eta,
        &coeffs.h_r_inv,
        dt,
    );
    let g = phase_derivs(
        &c.glassy.k_neq,
        &c.glassy.d_k_eq,
        &c.glassy.d_k_neq,
        c.glassy.eta,
        c.glassy.d_eta,
        &coeffs.h_g_inv,
        dt,
    );

    // dD = (dphi_r + d(dphi_g)) I + dphi_g A_g^-1 A_r
    //      + phi_g (-A_g^-1 dA_g A_g^-1 A_r + A_g^-1 dA_r)
    //      + (dt/eta_i) dA_r - (dt/eta_i^2) deta_i A_r
    let d_phi_r = -f.d_phi_g_drho;
    let d_d = (d_phi_r + f.d_dphi_g_drho) * VoigtMat::identity()
        + f.d_phi_g_drho * coeffs.a_g_inv * coeffs.a_r
        + f.phi_g * (-coeffs.a_g_inv * g.d_a * coeffs.a_g_inv * coeffs.a_r + coeffs.a_g_inv * r.d_a)
        + (dt / c.eta_i) * r.d_a
        - (dt / (c.eta_i * c.eta_i)) * c.d_eta_i * coeffs.a_r;

    CoeffSensitivity {
        d_a_r: r.d_a,
        d_a_g: g.d_a,
        d_b_r: r.d_b,
        d_b_g: g.d_b,
        d_h_r: r.d_h,
        d_h_g: g.d_h,
        d_d,
        d_k_eq_r: c.rubbery.d_k_eq,
        d_k_neq_r: c.rubbery.d_k_neq,
        d_k_eq_g: c.glassy.d_k_eq,
        d_k_neq_g: c.glassy.d_k_neq,
        d_eta_r: c.rubbery.d_eta,
        d_eta_g: c.glassy.d_eta,
        d_eta_i: c.d_eta_i,
        d_phi_g: f.d_phi_g_drho,
        d_phi_r,
        d_dphi_g: f.d_dphi_g_drho,
    }
}

/// rho-derivative of the thermal strain
/// `(phi_r alpha_r + phi_g alpha_g)(T - T_ref) [1, 1, 0]`.
pub fn thermal_strain_rho_derivative(
    t_now: f64,
    t_ref: f64,
    fractions: &PhaseFractions,
    consts: &InterpolatedConstants,
) -> VoigtVec {
    let d_phi_r = -fractions.d_phi_g_drho;
    let d_alpha = fractions.phi_r * consts.rubbery.d_alpha
        + d_phi_r * consts.rubbery.alpha
        + fractions.phi_g * consts.glassy.d_alpha
        + fractions.d_phi_g_drho * consts.glassy.alpha;
    hydrostatic(d_alpha * (t_now - t_ref))
}

/// rho-derivatives of the history fields at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainHistorySens {
    pub d_eps_r: VoigtVec,
    pub d_eps_g: VoigtVec,
    pub d_eps_ir: VoigtVec,
    pub d_eps_ig: VoigtVec,
    pub d_eps_i: VoigtVec,
    pub d_eps_is: VoigtVec,
    pub step: usize,
}

impl StrainHistorySens {
    /// Sensitivities at the initial state are all zero.
    pub fn initial() -> Self {
        Self {
            d_eps_r: VoigtVec::zeros(),
            d_eps_g: VoigtVec::zeros(),
            d_eps_ir: VoigtVec::zeros(),
            d_eps_ig: VoigtVec::zeros(),
            d_eps_i: VoigtVec::zeros(),
            d_eps_is: VoigtVec::zeros(),
            step: 0,
        }
    }
}

/// d(e_r)/d(rho) at the new step, holding the total strain fixed:
///   dC = dphi_g A_g^-1 (-B_r e_ir + B_g e_ig)
///        + phi_g [ -A_g^-1 dA_g A_g^-1 (-B_r e_ir + B_g e_ig)
///                  + A_g^-1 (-dB_r e_ir - B_r de_ir + dB_g e_ig + B_g de_ig) ]
///        + (dt/eta_i)(dB_r e_ir + B_r de_ir)
///        - (dt/eta_i^2) deta_i B_r e_ir - de_i - de_is - de_th
///   de_r = -D^-1 dD e_r + D^-1 dC     (with C recovered as D e_r)
pub fn rubbery_strain_sensitivity(
    coeffs: &CoeffSet,
    sens: &CoeffSensitivity,
    prev: &StrainHistory,
    prev_sens: &StrainHistorySens,
    eps_r_now: &VoigtVec,
    d_eps_th: &VoigtVec,
) -> VoigtVec {
    let c = &coeffs.consts;
    let f = &coeffs.fractions;
    let dt = coeffs.dt;
    let hist_mix = -(coeffs.b_r * prev.eps_ir) + coeffs.b_g * prev.eps_ig;
    let d_c = f.d_phi_g_drho * (coeffs.a_g_inv * hist_mix)
        + f.phi_g
            * (-(coeffs.a_g_inv * sens.d_a_g * coeffs.a_g_inv * hist_mix)
                + coeffs.a_g_inv
                    * (-(sens.d_b_r * prev.eps_ir) - coeffs.b_r * prev_sens.d_eps_ir
                        + sens.d_b_g * prev.eps_ig
                        + coeffs.b_g * prev_sens.d_eps_ig))
        + (dt / c.eta_i) * (sens.d_b_r * prev.eps_ir + coeffs.b_r * prev_sens.d_eps_ir)
        - (dt / (c.eta_i * c.eta_i)) * c.d_eta_i * (coeffs.b_r * prev.eps_ir)
        - prev_sens.d_eps_i
        - prev_sens.d_eps_is
        - d_eps_th;
    -(coeffs.d_inv * sens.d_d * eps_r_now) + coeffs.d_inv * d_c
}

/// Propagates the history sensitivities by one step given the new rubbery
/// strain and its derivative.
pub fn state_sensitivity(
    coeffs: &CoeffSet,
    sens: &CoeffSensitivity,
    prev: &StrainHistory,
    prev_sens: &StrainHistorySens,
    eps_r_now: &VoigtVec,
    d_eps_r_now: &VoigtVec,
    step: usize,
) -> Result<StrainHistorySens> {
    if prev_sens.step + 1 != step || prev.step + 1 != step {
        return Err(Error::Contract(format!(
            "state_sensitivity: histories at steps {}/{}, expected {}",
            prev.step,
            prev_sens.step,
            step - 1
        )));
    }
    let c = &coeffs.consts;
    let dt = coeffs.dt;

    // de_ir' = -H_r^-1 dH_r H_r^-1 e_ir + H_r^-1 de_ir
    //          + (dt/eta_r)(-H_r^-1 dH_r H_r^-1 K_neq e_r + H_r^-1 dK_neq e_r
    //                        + H_r^-1 K_neq de_r)
    //          - (dt/eta_r^2) deta_r H_r^-1 K_neq e_r
    let visc_r = dt / c.rubbery.eta;
    let d_eps_ir = -(coeffs.h_r_inv * sens.d_h_r * coeffs.h_r_inv * prev.eps_ir)
        + coeffs.h_r_inv * prev_sens.d_eps_ir
        + visc_r
            * (-(coeffs.h_r_inv * sens.d_h_r * coeffs.h_r_inv * (c.rubbery.k_neq * eps_r_now))
                + coeffs.h_r_inv * (sens.d_k_neq_r * eps_r_now)
                + coeffs.h_r_inv * (c.rubbery.k_neq * d_eps_r_now))
        - (visc_r / c.rubbery.eta) * sens.d_eta_r * (coeffs.h_r_inv * (c.rubbery.k_neq * eps_r_now));

    // e_g at the new step and its derivative (Eq. for e_g differentiated):
    let eps_g_now = coeffs.a_g_inv
        * (coeffs.a_r * eps_r_now - coeffs.b_r * prev.eps_ir + coeffs.b_g * prev.eps_ig);
    let d_eps_g = coeffs.a_g_inv
        * (sens.d_a_r * eps_r_now + coeffs.a_r * d_eps_r_now - sens.d_b_r * prev.eps_ir
            - coeffs.b_r * prev_sens.d_eps_ir
            + sens.d_b_g * prev.eps_ig
            + coeffs.b_g * prev_sens.d_eps_ig)
        - coeffs.a_g_inv * sens.d_a_g * eps_g_now;

    let visc_g = dt / c.glassy.eta;
    let d_eps_ig = -(coeffs.h_g_inv * sens.d_h_g * coeffs.h_g_inv * prev.eps_ig)
        + coeffs.h_g_inv * prev_sens.d_eps_ig
        + visc_g
            * (-(coeffs.h_g_inv * sens.d_h_g * coeffs.h_g_inv * (c.glassy.k_neq * eps_g_now))
                + coeffs.h_g_inv * (sens.d_k_neq_g * eps_g_now)
                + coeffs.h_g_inv * (c.glassy.k_neq * d_eps_g))
        - (visc_g / c.glassy.eta) * sens.d_eta_g * (coeffs.h_g_inv * (c.glassy.k_neq * eps_g_now));

    // de_i' = de_i + (dt/eta_i)(dA_r e_r + A_r de_r - dB_r e_ir - B_r de_ir)
    //         - (dt/eta_i^2) deta_i (A_r e_r - B_r e_ir)
    let d_eps_i = prev_sens.d_eps_i
        + (dt / c.eta_i)
            * (sens.d_a_r * eps_r_now + coeffs.a_r * d_eps_r_now
                - sens.d_b_r * prev.eps_ir
                - coeffs.b_r * prev_sens.d_eps_ir)
        - (dt / (c.eta_i * c.eta_i))
            * c.d_eta_i
            * (coeffs.a_r * eps_r_now - coeffs.b_r * prev.eps_ir);

    // de_is' = de_is + dphi_g de_r + d(dphi_g) e_r
    let d_eps_is =
        prev_sens.d_eps_is + coeffs.fractions.dphi_g * d_eps_r_now + sens.d_dphi_g * eps_r_now;

    Ok(StrainHistorySens {
        d_eps_r: *d_eps_r_now,
        d_eps_g,
        d_eps_ir,
        d_eps_ig,
        d_eps_i,
        d_eps_is,
        step,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::toy_params;
    use super::super::{
        build_coeffs, interpolate_phase, phase_fractions, state_update, thermal_strain, PhaseLaw,
    };
    use super::*;

    fn rel_err(a: &VoigtMat, b: &VoigtMat, scale: f64) -> f64 {
        (a - b).amax() / scale.max(1e-300)
    }

    #[test]
    fn zero_primitives_give_zero_coeff_sensitivity() {
        // Constant interpolation (lo == hi) kills every primitive derivative,
        // and Eqs. for dA, dB, dH, dD are linear in the primitives.
        let mut params = toy_params();
        for c in [&mut params.rubbery, &mut params.glassy] {
            c.e_eq.lo = c.e_eq.hi;
            c.e_neq.lo = c.e_neq.hi;
            c.eta.lo = c.eta.hi;
            c.alpha.lo = c.alpha.hi;
        }
        params.eta_i.lo = params.eta_i.hi;
        let coeffs = build_coeffs(0.3, 315.0, 325.0, 1.0, &params).unwrap();
        let s = coeff_sensitivity(&coeffs, &params);
        assert_eq!(s.d_a_r.amax(), 0.0);
        assert_eq!(s.d_a_g.amax(), 0.0);
        assert_eq!(s.d_b_r.amax(), 0.0);
        assert_eq!(s.d_b_g.amax(), 0.0);
        assert_eq!(s.d_h_r.amax(), 0.0);
        assert_eq!(s.d_h_g.amax(), 0.0);
        assert_eq!(s.d_d.amax(), 0.0);
    }

    #[test]
    fn zero_step_limit_of_derivatives() {
        // dt = 0: dH_r = 0 and dB_r = dK_neq_r.
        let params = toy_params();
        let coeffs = build_coeffs(0.3, 315.0, 325.0, 0.0, &params).unwrap();
        let s = coeff_sensitivity(&coeffs, &params);
        assert_eq!(s.d_h_r.amax(), 0.0);
        assert!(rel_err(&s.d_b_r, &s.d_k_neq_r, s.d_k_neq_r.amax()) < 1e-14);
    }

    #[test]
    fn coeff_sensitivity_matches_finite_differences() {
        let mut params = toy_params();
        // Exercise the d(phi)/d(rho) branches of dD as well.
        params.phase_law = PhaseLaw::Logistic {
            steepness: 0.2,
            rho_tg_shift: 4.0,
        };
        let (rho, t_now, t_prev, dt) = (0.3, 318.0, 326.0, 1.5);
        let coeffs = build_coeffs(rho, t_now, t_prev, dt, &params).unwrap();
        let s = coeff_sensitivity(&coeffs, &params);

        let h = 1e-6 * rho;
        let cp = build_coeffs(rho + h, t_now, t_prev, dt, &params).unwrap();
        let cm = build_coeffs(rho - h, t_now, t_prev, dt, &params).unwrap();
        let fd = |p: &VoigtMat, m: &VoigtMat| (p - m) / (2.0 * h);

        for (analytic, fdv, forward, name) in [
            (&s.d_h_r, fd(&cp.h_r, &cm.h_r), &coeffs.h_r, "dH_r"),
            (&s.d_h_g, fd(&cp.h_g, &cm.h_g), &coeffs.h_g, "dH_g"),
            (&s.d_b_r, fd(&cp.b_r, &cm.b_r), &coeffs.b_r, "dB_r"),
            (&s.d_b_g, fd(&cp.b_g, &cm.b_g), &coeffs.b_g, "dB_g"),
            (&s.d_a_r, fd(&cp.a_r, &cm.a_r), &coeffs.a_r, "dA_r"),
            (&s.d_a_g, fd(&cp.a_g, &cm.a_g), &coeffs.a_g, "dA_g"),
            (&s.d_d, fd(&cp.d, &cm.d), &coeffs.d, "dD"),
        ] {
            // FD roundoff floor: differencing the forward tensor loses
            // roughly eps * |forward| / h of absolute accuracy.
            let noise = 8.0 * f64::EPSILON * forward.amax() / h;
            let scale = analytic.amax().max(fdv.amax()).max(noise);
            assert!(
                rel_err(analytic, &fdv, scale) < 1e-6,
                "{name}: rel err {} (scale {scale:.3e})",
                rel_err(analytic, &fdv, scale)
            );
        }
    }

    /// Chains `state_update` and the sensitivity recurrences over several
    /// steps and compares against central FD of the whole chain w.r.t. rho
    /// (total strain per step held fixed).
    fn chain_states(
        params: &PhaseParams,
        rho: f64,
        temps: &[(f64, f64)],
        dts: &[f64],
        strains: &[VoigtVec],
        t_ref: f64,
    ) -> Vec<StrainHistory> {
        let mut out = Vec::new();
        let mut prev = StrainHistory::initial();
        for (k, ((&(t_now, t_prev), &dt), eps_total)) in
            temps.iter().zip(dts).zip(strains).enumerate()
        {
            let coeffs = build_coeffs(rho, t_now, t_prev, dt, params).unwrap();
            let fr = phase_fractions(t_now, t_prev, rho, params);
            let consts = interpolate_phase(rho, params).unwrap();
            let eps_th = thermal_strain(t_now, t_ref, &fr, &consts);
            let next = state_update(&coeffs, eps_total, &prev, &eps_th, k + 1).unwrap();
            prev = next.clone();
            out.push(next);
        }
        out
    }

    #[test]
    fn state_sensitivity_chain_matches_finite_differences() {
        let mut params = toy_params();
        params.phase_law = PhaseLaw::Logistic {
            steepness: 0.2,
            rho_tg_shift: 3.0,
        };
        let rho = 0.35;
        let t_ref = 350.0;
        let temps = [(340.0, 350.0), (325.0, 340.0), (310.0, 325.0)];
        let dts = [1.0, 2.0, 1.5];
        let strains = [
            VoigtVec::new(1.0e-3, -2.0e-4, 3.0e-4),
            VoigtVec::new(8.0e-4, 1.0e-4, -2.0e-4),
            VoigtVec::new(-4.0e-4, 6.0e-4, 1.0e-4),
        ];

        // Analytic chain.
        let mut prev = StrainHistory::initial();
        let mut prev_sens = StrainHistorySens::initial();
        let mut analytic = Vec::new();
        for (k, ((&(t_now, t_prev), &dt), eps_total)) in
            temps.iter().zip(&dts).zip(&strains).enumerate()
        {
            let coeffs = build_coeffs(rho, t_now, t_prev, dt, &params).unwrap();
            let sens = coeff_sensitivity(&coeffs, &params);
            let fr = phase_fractions(t_now, t_prev, rho, &params);
            let consts = interpolate_phase(rho, &params).unwrap();
            let eps_th = thermal_strain(t_now, t_ref, &fr, &consts);
            let d_eps_th = thermal_strain_rho_derivative(t_now, t_ref, &fr, &consts);
            let next = state_update(&coeffs, eps_total, &prev, &eps_th, k + 1).unwrap();
            let d_eps_r = rubbery_strain_sensitivity(
                &coeffs, &sens, &prev, &prev_sens, &next.eps_r, &d_eps_th,
            );
            let next_sens =
                state_sensitivity(&coeffs, &sens, &prev, &prev_sens, &next.eps_r, &d_eps_r, k + 1)
                    .unwrap();
            prev = next;
            prev_sens = next_sens.clone();
            analytic.push(next_sens);
        }

        // FD chain.
        let h = 1e-6 * rho;
        let plus = chain_states(&params, rho + h, &temps, &dts, &strains, t_ref);
        let minus = chain_states(&params, rho - h, &temps, &dts, &strains, t_ref);

        for (k, a) in analytic.iter().enumerate() {
            let fd = |f: fn(&StrainHistory) -> VoigtVec| (f(&plus[k]) - f(&minus[k])) / (2.0 * h);
            for (an, fdv, name) in [
                (a.d_eps_r, fd(|s| s.eps_r), "d_eps_r"),
                (a.d_eps_g, fd(|s| s.eps_g), "d_eps_g"),
                (a.d_eps_ir, fd(|s| s.eps_ir), "d_eps_ir"),
                (a.d_eps_ig, fd(|s| s.eps_ig), "d_eps_ig"),
                (a.d_eps_i, fd(|s| s.eps_i), "d_eps_i"),
                (a.d_eps_is, fd(|s| s.eps_is), "d_eps_is"),
            ] {
                let scale = an.amax().max(fdv.amax()).max(1e-12);
                let err = (an - fdv).amax() / scale;
                assert!(err < 1e-5, "step {k} {name}: rel err {err:.3e}");
            }
        }
    }

    #[test]
    fn zero_inputs_give_zero_state_sensitivity() {
        let params = toy_params();
        let coeffs = build_coeffs(0.3, 330.0, 340.0, 1.0, &params).unwrap();
        // All primitive derivatives zero models a design-insensitive point.
        let sens = CoeffSensitivity {
            d_a_r: VoigtMat::zeros(),
            d_a_g: VoigtMat::zeros(),
            d_b_r: VoigtMat::zeros(),
            d_b_g: VoigtMat::zeros(),
            d_h_r: VoigtMat::zeros(),
            d_h_g: VoigtMat::zeros(),
            d_d: VoigtMat::zeros(),
            d_k_eq_r: VoigtMat::zeros(),
            d_k_neq_r: VoigtMat::zeros(),
            d_k_eq_g: VoigtMat::zeros(),
            d_k_neq_g: VoigtMat::zeros(),
            d_eta_r: 0.0,
            d_eta_g: 0.0,
            d_eta_i: 0.0,
            d_phi_g: 0.0,
            d_phi_r: 0.0,
            d_dphi_g: 0.0,
        };
        let prev = StrainHistory::initial();
        let prev_sens = StrainHistorySens::initial();
        let d_eps_r = rubbery_strain_sensitivity(
            &coeffs,
            &sens,
            &prev,
            &prev_sens,
            &VoigtVec::zeros(),
            &VoigtVec::zeros(),
        );
        assert_eq!(d_eps_r, VoigtVec::zeros());
        let out = state_sensitivity(
            &coeffs,
            &sens,
            &prev,
            &prev_sens,
            &VoigtVec::zeros(),
            &VoigtVec::zeros(),
            1,
        )
        .unwrap();
        assert_eq!(out.d_eps_ir, VoigtVec::zeros());
        assert_eq!(out.d_eps_ig, VoigtVec::zeros());
        assert_eq!(out.d_eps_i, VoigtVec::zeros());
        assert_eq!(out.d_eps_is, VoigtVec::zeros());
    }

    #[test]
    fn stored_strain_sensitivity_frozen_without_phase_change() {
        // dphi_g = 0 and d(dphi_g) = 0: de_is passes through unchanged.
        let params = toy_params();
        let coeffs = build_coeffs(0.3, 330.0, 330.0, 1.0, &params).unwrap();
        assert_eq!(coeffs.fractions.dphi_g, 0.0);
        let sens = coeff_sensitivity(&coeffs, &params);
        let prev = StrainHistory::initial();
        let mut prev_sens = StrainHistorySens::initial();
        prev_sens.d_eps_is = VoigtVec::new(1.0, 2.0, 3.0);
        let out = state_sensitivity(
            &coeffs,
            &sens,
            &prev,
            &prev_sens,
            &VoigtVec::new(1e-3, 0.0, 0.0),
            &VoigtVec::new(1e-4, 0.0, 0.0),
            1,
        )
        .unwrap();
        assert_eq!(out.d_eps_is, prev_sens.d_eps_is);
    }
}
