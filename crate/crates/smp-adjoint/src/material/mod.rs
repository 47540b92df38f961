//! Two-phase shape-memory-polymer constitutive model.
//!
//! The material mixes a rubbery and a glassy viscoelastic phase through a
//! temperature-driven glassy volume fraction. A per-element design variable
//! `rho` (mixing ratio) interpolates every material constant between a weak
//! and a strong candidate material with a SIMP-style power law, which makes
//! the whole forward model smoothly differentiable in `rho`.

mod coeffs;
mod sensitivity;
mod state;

pub use coeffs::{build_coeffs, build_coeffs_from_parts, CoeffSet};
pub(crate) use state::c_history_part;
pub use sensitivity::{
    coeff_sensitivity, rubbery_strain_sensitivity, state_sensitivity, thermal_strain_rho_derivative,
    CoeffSensitivity, StrainHistorySens,
};
pub use state::{state_update, stress, StrainHistory};

use crate::error::{Error, Result};
use crate::voigt::{hydrostatic, isotropic_stiffness, VoigtMat, VoigtVec};
use serde::{Deserialize, Serialize};

/// Power-law interpolation between a weak (`lo`) and strong (`hi`) value:
/// `M(rho) = lo + rho^penal (hi - lo)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interp {
    pub lo: f64,
    pub hi: f64,
}

impl Interp {
    pub fn constant(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    /// Value and d/drho at `rho`.
    pub fn at(&self, rho: f64, penal: f64) -> (f64, f64) {
        let p = rho.powf(penal);
        let dp = penal * rho.powf(penal - 1.0);
        (self.lo + p * (self.hi - self.lo), dp * (self.hi - self.lo))
    }
}

/// Candidate constants for one viscoelastic phase (rubbery or glassy).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConstants {
    /// Equilibrium-branch Young's modulus (Pa).
    pub e_eq: Interp,
    /// Non-equilibrium (viscous-branch) Young's modulus (Pa).
    pub e_neq: Interp,
    /// Phase viscosity (Pa s).
    pub eta: Interp,
    /// Thermal expansion coefficient (1/K).
    pub alpha: Interp,
}

/// Glassy-fraction law. The default is a logistic in temperature; a nonzero
/// `rho_tg_shift` moves the transition temperature with the design variable,
/// exercising the d(phi)/d(rho) code paths of the sensitivity chain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhaseLaw {
    Logistic {
        /// Transition sharpness s (1/K): phi_g = 1 / (1 + exp(s (T - T_g))).
        steepness: f64,
        /// Effective T_g shift per unit rho (K); 0 = temperature-only law.
        #[serde(default)]
        rho_tg_shift: f64,
    },
}

/// Full material parameter block: one instance covers both phases, the
/// interface viscosity, the phase-fraction law and the design interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseParams {
    pub rubbery: PhaseConstants,
    pub glassy: PhaseConstants,
    /// Interface viscosity (Pa s).
    pub eta_i: Interp,
    /// Poisson ratio, shared by both phases.
    pub nu: f64,
    /// Glass transition temperature (K).
    pub t_g: f64,
    pub phase_law: PhaseLaw,
    /// SIMP interpolation exponent.
    pub penal: f64,
    /// Lower bound of the design variable.
    pub rho_min: f64,
}

impl PhaseParams {
    /// Validates the invariants of the parameter block.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: &Interp, what: &str| -> Result<()> {
            if v.lo < 0.0 || v.hi <= 0.0 {
                return Err(Error::Config(format!(
                    "{what} must be positive (lo >= 0, hi > 0), got lo={}, hi={}",
                    v.lo, v.hi
                )));
            }
            Ok(())
        };
        for (c, tag) in [(&self.rubbery, "rubbery"), (&self.glassy, "glassy")] {
            positive(&c.e_eq, &format!("{tag}.e_eq"))?;
            positive(&c.e_neq, &format!("{tag}.e_neq"))?;
            if c.eta.lo <= 0.0 || c.eta.hi <= 0.0 {
                return Err(Error::Config(format!("{tag}.eta must be > 0")));
            }
        }
        if self.eta_i.lo <= 0.0 || self.eta_i.hi <= 0.0 {
            return Err(Error::Config("eta_i must be > 0".into()));
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(Error::Config(format!("nu must be in (0, 0.5), got {}", self.nu)));
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0) {
            return Err(Error::Config(format!(
                "rho_min must be in (0, 1), got {}",
                self.rho_min
            )));
        }
        if self.penal < 1.0 {
            return Err(Error::Config(format!("penal must be >= 1, got {}", self.penal)));
        }
        Ok(())
    }

    fn check_rho(&self, rho: f64) -> Result<()> {
        // Small slack so FD probes at the bounds stay legal.
        if !(self.rho_min - 1e-12..=1.0 + 1e-12).contains(&rho) {
            return Err(Error::Contract(format!(
                "rho = {rho} outside [{}, 1]",
                self.rho_min
            )));
        }
        Ok(())
    }
}

/// One phase's interpolated tensors and scalars with their rho-derivatives.
#[derive(Debug, Clone)]
pub struct PhaseInterp {
    pub k_eq: VoigtMat,
    pub k_neq: VoigtMat,
    pub d_k_eq: VoigtMat,
    pub d_k_neq: VoigtMat,
    pub eta: f64,
    pub d_eta: f64,
    pub alpha: f64,
    pub d_alpha: f64,
}

/// All design-interpolated constants at one `rho`.
#[derive(Debug, Clone)]
pub struct InterpolatedConstants {
    pub rubbery: PhaseInterp,
    pub glassy: PhaseInterp,
    pub eta_i: f64,
    pub d_eta_i: f64,
}

/// Evaluates the SIMP interpolation of every material constant (moduli as
/// Voigt stiffness tensors, viscosities, thermal expansions) and their
/// explicit derivatives with respect to the design variable.
pub fn interpolate_phase(rho: f64, params: &PhaseParams) -> Result<InterpolatedConstants> {
    params.check_rho(rho)?;
    let phase = |c: &PhaseConstants| {
        let (e_eq, d_e_eq) = c.e_eq.at(rho, params.penal);
        let (e_neq, d_e_neq) = c.e_neq.at(rho, params.penal);
        let (eta, d_eta) = c.eta.at(rho, params.penal);
        let (alpha, d_alpha) = c.alpha.at(rho, params.penal);
        PhaseInterp {
            k_eq: isotropic_stiffness(e_eq, params.nu),
            k_neq: isotropic_stiffness(e_neq, params.nu),
            d_k_eq: isotropic_stiffness(d_e_eq, params.nu),
            d_k_neq: isotropic_stiffness(d_e_neq, params.nu),
            eta,
            d_eta,
            alpha,
            d_alpha,
        }
    };
    let (eta_i, d_eta_i) = params.eta_i.at(rho, params.penal);
    Ok(InterpolatedConstants {
        rubbery: phase(&params.rubbery),
        glassy: phase(&params.glassy),
        eta_i,
        d_eta_i,
    })
}

/// Phase volume fractions at a step, with the increment over the step and
/// the explicit rho-derivatives used by the sensitivity chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFractions {
    /// Glassy fraction at the current temperature.
    pub phi_g: f64,
    /// Rubbery fraction, phi_r = 1 - phi_g.
    pub phi_r: f64,
    /// Increment phi_g(T_now) - phi_g(T_prev).
    pub dphi_g: f64,
    /// d(phi_g(T_now))/d(rho); zero for the temperature-only law.
    pub d_phi_g_drho: f64,
    /// d(dphi_g)/d(rho).
    pub d_dphi_g_drho: f64,
}

fn phi_g_at(law: &PhaseLaw, t: f64, t_g: f64, rho: f64) -> (f64, f64) {
    match *law {
        PhaseLaw::Logistic {
            steepness,
            rho_tg_shift,
        } => {
            let arg = steepness * (t - (t_g + rho_tg_shift * rho));
            // Saturate to avoid exp overflow far from the transition.
            let phi = if arg > 500.0 {
                0.0
            } else if arg < -500.0 {
                1.0
            } else {
                1.0 / (1.0 + arg.exp())
            };
            // d(phi)/d(rho) = phi (1 - phi) s * rho_tg_shift
            let d_phi = phi * (1.0 - phi) * steepness * rho_tg_shift;
            (phi, d_phi)
        }
    }
}

/// Glassy/rubbery fractions for a step from `t_prev` to `t_now`.
pub fn phase_fractions(t_now: f64, t_prev: f64, rho: f64, params: &PhaseParams) -> PhaseFractions {
    let (phi_now, d_phi_now) = phi_g_at(&params.phase_law, t_now, params.t_g, rho);
    let (phi_prev, d_phi_prev) = phi_g_at(&params.phase_law, t_prev, params.t_g, rho);
    PhaseFractions {
        phi_g: phi_now,
        phi_r: 1.0 - phi_now,
        dphi_g: phi_now - phi_prev,
        d_phi_g_drho: d_phi_now,
        d_dphi_g_drho: d_phi_now - d_phi_prev,
    }
}

/// Thermal strain `(phi_r alpha_r + phi_g alpha_g)(T - T_ref) [1, 1, 0]`.
pub fn thermal_strain(
    t_now: f64,
    t_ref: f64,
    fractions: &PhaseFractions,
    consts: &InterpolatedConstants,
) -> VoigtVec {
    let alpha = fractions.phi_r * consts.rubbery.alpha + fractions.phi_g * consts.glassy.alpha;
    hydrostatic(alpha * (t_now - t_ref))
}
