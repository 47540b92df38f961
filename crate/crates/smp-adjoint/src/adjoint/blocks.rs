//! One-step Jacobian blocks of the state-update map.
//!
//! Each block is the exact partial derivative of one strain-history output
//! with respect to one of its inputs, so chaining them over the update DAG
//! reproduces any cross-step strain derivative. The naming records exactly
//! that: `er_from_eir_prev` is d(e_r at step n) / d(e_ir at step n-1).

use crate::error::{Error, Result};
use crate::fea::ForwardTrace;
use crate::material::CoeffSet;
use crate::voigt::VoigtMat;

/// Jacobians of one element's state update at one step.
#[derive(Debug, Clone)]
pub struct StepBlocks {
    /// d(e_r)/d(e_ir_prev) = D^-1 (-phi_g A_g^-1 B_r + (dt/eta_i) B_r)
    pub er_from_eir_prev: VoigtMat,
    /// d(e_r)/d(e_ig_prev) = D^-1 phi_g A_g^-1 B_g
    pub er_from_eig_prev: VoigtMat,
    /// d(e_r)/d(e_i_prev) = d(e_r)/d(e_is_prev) = -D^-1
    pub er_from_ei_prev: VoigtMat,
    /// d(e_ir)/d(e_r) = (dt/eta_r) H_r^-1 K^r_neq
    pub eir_from_er: VoigtMat,
    /// d(e_ir)/d(e_ir_prev) = H_r^-1
    pub eir_from_eir_prev: VoigtMat,
    /// d(e_g)/d(e_r) = A_g^-1 A_r
    pub eg_from_er: VoigtMat,
    /// d(e_g)/d(e_ir_prev) = -A_g^-1 B_r
    pub eg_from_eir_prev: VoigtMat,
    /// d(e_g)/d(e_ig_prev) = A_g^-1 B_g
    pub eg_from_eig_prev: VoigtMat,
    /// d(e_ig)/d(e_g) = (dt/eta_g) H_g^-1 K^g_neq
    pub eig_from_eg: VoigtMat,
    /// d(e_ig)/d(e_ig_prev) = H_g^-1
    pub eig_from_eig_prev: VoigtMat,
    /// d(e_i)/d(e_r) = (dt/eta_i) A_r
    pub ei_from_er: VoigtMat,
    /// d(e_i)/d(e_ir_prev) = -(dt/eta_i) B_r
    pub ei_from_eir_prev: VoigtMat,
    /// d(e_is)/d(e_r) = dphi_g (scalar multiple of identity)
    pub eis_from_er: f64,
}

impl StepBlocks {
    /// Derives the blocks from one element's coefficient set.
    pub fn from_coeffs(c: &CoeffSet) -> Self {
        let visc_r = c.dt / c.consts.rubbery.eta;
        let visc_g = c.dt / c.consts.glassy.eta;
        let visc_i = c.dt / c.consts.eta_i;
        StepBlocks {
            er_from_eir_prev: c.d_inv * (-(c.fractions.phi_g) * c.a_g_inv * c.b_r + visc_i * c.b_r),
            er_from_eig_prev: c.d_inv * (c.fractions.phi_g * c.a_g_inv * c.b_g),
            er_from_ei_prev: -c.d_inv,
            eir_from_er: visc_r * c.h_r_inv * c.consts.rubbery.k_neq,
            eir_from_eir_prev: c.h_r_inv,
            eg_from_er: c.a_g_inv * c.a_r,
            eg_from_eir_prev: -(c.a_g_inv * c.b_r),
            eg_from_eig_prev: c.a_g_inv * c.b_g,
            eig_from_eg: visc_g * c.h_g_inv * c.consts.glassy.k_neq,
            eig_from_eig_prev: c.h_g_inv,
            ei_from_er: visc_i * c.a_r,
            ei_from_eir_prev: -(visc_i * c.b_r),
            eis_from_er: c.fractions.dphi_g,
        }
    }
}

/// Per-step, per-element Jacobian blocks for a full forward trace.
#[derive(Debug, Clone)]
pub struct DerivativeBlocks {
    /// `steps[n - 1][elem]` holds the blocks of step `n` (1-based).
    steps: Vec<Vec<StepBlocks>>,
}

impl DerivativeBlocks {
    pub fn from_trace(trace: &ForwardTrace) -> Self {
        let steps = trace.records[1..]
            .iter()
            .map(|rec| rec.coeffs.iter().map(StepBlocks::from_coeffs).collect())
            .collect();
        DerivativeBlocks { steps }
    }

    /// Builds from explicit per-step, per-element blocks (synthetic traces
    /// and degenerate-limit tests).
    pub fn from_step_blocks(steps: Vec<Vec<StepBlocks>>) -> Self {
        DerivativeBlocks { steps }
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Blocks of element `elem` at (1-based) step `n`.
    pub fn at(&self, n: usize, elem: usize) -> Result<&StepBlocks> {
        self.steps
            .get(n.wrapping_sub(1))
            .and_then(|s| s.get(elem))
            .ok_or_else(|| Error::Contract(format!("no blocks for step {n}, element {elem}")))
    }
}
