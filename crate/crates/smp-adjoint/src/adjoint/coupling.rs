//! Time-coupling terms d(R^k)/d(u^i) of the adjoint sweep.
//!
//! The step-k residual depends on the step-i displacement (i < k) through
//! the strain history. At quadrature-point level the chain is
//!
//!   d(sigma_k)/d(e_r_i) = A_r(k) d(e_r_k)/d(e_r_i) - B_r(k) d(e_ir_{k-1})/d(e_r_i)
//!   d(e_r_i)/d(e_total_i) = D_i^-1
//!
//! and the strain-field derivatives are traced back in time by four mutually
//! recursive functions, one per history field. The pure recursion re-derives
//! every path through the update DAG and is exponential in (k - i); the
//! memoized variant caches each (field, step) block, which collapses the
//! cost to linear in (k - i) while producing bitwise-identical values (same
//! arithmetic, each distinct block computed once).

use super::blocks::DerivativeBlocks;
use crate::error::{Error, Result};
use crate::fea::ForwardTrace;
use crate::mesh::{element_b_all, Mesh};
use crate::voigt::VoigtMat;
use nalgebra::SMatrix;
use std::collections::HashMap;

/// Strain-field tag for the coupling recursion and its memo table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    /// Rubbery strain e_r.
    Er,
    /// Glassy strain e_g.
    Eg,
    /// Rubbery viscous strain e_ir.
    Eir,
    /// Glassy viscous strain e_ig.
    Eig,
    /// Interface slip strain e_i.
    Ei,
    /// Stored strain e_is.
    Eis,
}

/// Memo table for the coupling recursion of one element: maps
/// (field, step k, base step i) to d(e_field_k)/d(e_r_i).
#[derive(Debug, Default)]
pub struct CouplingCache {
    map: HashMap<(Field, usize, usize), VoigtMat>,
    pub hits: u64,
    pub misses: u64,
}

impl CouplingCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Evaluation mode of the coupling terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMode {
    /// Faithful depth-first recursion, exponential in (k - i).
    Recursive,
    /// Memoized recursion, linear in (k - i).
    Memoized,
}

/// Tracer for one element's strain-derivative chain.
pub struct Tracer<'a> {
    blocks: &'a DerivativeBlocks,
    elem: usize,
    cache: Option<&'a mut CouplingCache>,
}

impl<'a> Tracer<'a> {
    pub fn new(
        blocks: &'a DerivativeBlocks,
        elem: usize,
        cache: Option<&'a mut CouplingCache>,
    ) -> Self {
        Self {
            blocks,
            elem,
            cache,
        }
    }

    /// d(e_field at step k)/d(e_r at step i), for k >= i >= 1.
    pub fn eval(&mut self, field: Field, k: usize, i: usize) -> Result<VoigtMat> {
        if k < i {
            return Err(Error::Contract(format!(
                "coupling tracer: field step {k} precedes base step {i}"
            )));
        }
        if let Some(cache) = self.cache.as_deref_mut() {
            if let Some(v) = cache.map.get(&(field, k, i)) {
                cache.hits += 1;
                return Ok(*v);
            }
            cache.misses += 1;
        }
        let b = self.blocks.at(k, self.elem)?;
        let value = match field {
            Field::Er => {
                if k == i {
                    VoigtMat::identity()
                } else {
                    b.er_from_eir_prev * self.eval(Field::Eir, k - 1, i)?
                        + b.er_from_eig_prev * self.eval(Field::Eig, k - 1, i)?
                        + b.er_from_ei_prev * self.eval(Field::Ei, k - 1, i)?
                        + b.er_from_ei_prev * self.eval(Field::Eis, k - 1, i)?
                }
            }
            Field::Eg => {
                if k == i {
                    b.eg_from_er
                } else {
                    b.eg_from_er * self.eval(Field::Er, k, i)?
                        + b.eg_from_eir_prev * self.eval(Field::Eir, k - 1, i)?
                        + b.eg_from_eig_prev * self.eval(Field::Eig, k - 1, i)?
                }
            }
            Field::Eir => {
                if k == i {
                    b.eir_from_er
                } else {
                    b.eir_from_eir_prev * self.eval(Field::Eir, k - 1, i)?
                        + b.eir_from_er * self.eval(Field::Er, k, i)?
                }
            }
            Field::Eig => {
                if k == i {
                    b.eig_from_eg * b.eg_from_er
                } else {
                    b.eig_from_eig_prev * self.eval(Field::Eig, k - 1, i)?
                        + b.eig_from_eg * self.eval(Field::Eg, k, i)?
                }
            }
            Field::Ei => {
                if k == i {
                    b.ei_from_er
                } else {
                    self.eval(Field::Ei, k - 1, i)?
                        + b.ei_from_er * self.eval(Field::Er, k, i)?
                        + b.ei_from_eir_prev * self.eval(Field::Eir, k - 1, i)?
                }
            }
            Field::Eis => {
                if k == i {
                    b.eis_from_er * VoigtMat::identity()
                } else {
                    self.eval(Field::Eis, k - 1, i)?
                        + b.eis_from_er * self.eval(Field::Er, k, i)?
                }
            }
        };
        if let Some(cache) = self.cache.as_deref_mut() {
            cache.map.insert((field, k, i), value);
        }
        Ok(value)
    }
}

fn check_pair(trace: &ForwardTrace, k: usize, i: usize) -> Result<()> {
    if i == 0 || k <= i || k > trace.n_steps() {
        return Err(Error::Contract(format!(
            "coupling term requires 1 <= i < k <= {}, got k = {k}, i = {i}",
            trace.n_steps()
        )));
    }
    Ok(())
}

/// Quadrature-point level coupling factor d(sigma_k)/d(e_total_i) (term I
/// times term II) for one element.
fn coupling_tensor(
    trace: &ForwardTrace,
    tracer: &mut Tracer<'_>,
    k: usize,
    i: usize,
    elem: usize,
) -> Result<VoigtMat> {
    let coeffs_k = &trace.records[k].coeffs[elem];
    let coeffs_i = &trace.records[i].coeffs[elem];
    // term I: A_r(k) d(e_r_k)/d(e_r_i) - B_r(k) d(e_ir_{k-1})/d(e_r_i)
    let term_i = coeffs_k.a_r * tracer.eval(Field::Er, k, i)?
        - coeffs_k.b_r * tracer.eval(Field::Eir, k - 1, i)?;
    // term II: d(e_r_i)/d(e_total_i) = D_i^-1
    Ok(term_i * coeffs_i.d_inv)
}

fn scatter_to_dofs(
    mesh: &Mesh,
    elem: usize,
    tensor: &VoigtMat,
) -> Result<SMatrix<f64, 8, 8>> {
    let bms = element_b_all(mesh, elem)?;
    let mut out = SMatrix::<f64, 8, 8>::zeros();
    for bm in &bms {
        out += bm.w_detj * bm.b.transpose() * tensor * bm.b;
    }
    Ok(out)
}

/// Element-level dof block of d(R^k)/d(u^i) by the faithful exponential
/// recursion. `cap` bounds the traced span k - i.
pub fn coupling_recursive(
    mesh: &Mesh,
    trace: &ForwardTrace,
    blocks: &DerivativeBlocks,
    k: usize,
    i: usize,
    elem: usize,
    cap: usize,
) -> Result<SMatrix<f64, 8, 8>> {
    check_pair(trace, k, i)?;
    if k - i > cap {
        return Err(Error::Contract(format!(
            "recursive coupling span {} exceeds the configured cap {cap}; use the memoized mode",
            k - i
        )));
    }
    let mut tracer = Tracer::new(blocks, elem, None);
    let tensor = coupling_tensor(trace, &mut tracer, k, i, elem)?;
    scatter_to_dofs(mesh, elem, &tensor)
}

/// Element-level dof block of d(R^k)/d(u^i) through the memo table;
/// identical arithmetic to the recursion, each block computed once.
pub fn coupling_memoized(
    mesh: &Mesh,
    trace: &ForwardTrace,
    blocks: &DerivativeBlocks,
    k: usize,
    i: usize,
    elem: usize,
    cache: &mut CouplingCache,
) -> Result<SMatrix<f64, 8, 8>> {
    check_pair(trace, k, i)?;
    let mut tracer = Tracer::new(blocks, elem, Some(cache));
    let tensor = coupling_tensor(trace, &mut tracer, k, i, elem)?;
    scatter_to_dofs(mesh, elem, &tensor)
}

#[cfg(test)]
mod tests {
    use super::super::blocks::StepBlocks;
    use super::*;
    use crate::fea::{assemble_system, external_force};
    use crate::material::state_update;
    use crate::mesh::element_b_all;
    use crate::testutil::small_problem;
    use nalgebra::DVector;

    #[test]
    fn memoized_equals_recursive_for_all_pairs() {
        let (mesh, _, _, trace) = small_problem(3, 2, 6);
        let blocks = DerivativeBlocks::from_trace(&trace);
        for e in 0..mesh.n_elements() {
            let mut cache = CouplingCache::new();
            for i in 1..trace.n_steps() {
                for k in (i + 1)..=trace.n_steps() {
                    let rec = coupling_recursive(&mesh, &trace, &blocks, k, i, e, 16).unwrap();
                    let memo =
                        coupling_memoized(&mesh, &trace, &blocks, k, i, e, &mut cache).unwrap();
                    // Same arithmetic, each distinct block computed once:
                    // the values are bitwise identical.
                    assert_eq!(rec, memo, "element {e} pair ({k}, {i})");
                }
            }
            assert!(cache.hits > 0);
        }
    }

    #[test]
    fn cache_rewarm_is_pure_lookup() {
        let (mesh, _, _, trace) = small_problem(2, 1, 5);
        let blocks = DerivativeBlocks::from_trace(&trace);
        let mut cache = CouplingCache::new();
        let first = coupling_memoized(&mesh, &trace, &blocks, 4, 1, 0, &mut cache).unwrap();
        let misses = cache.misses;
        let hits = cache.hits;
        let second = coupling_memoized(&mesh, &trace, &blocks, 4, 1, 0, &mut cache).unwrap();
        assert_eq!(first, second);
        assert_eq!(cache.misses, misses, "re-query must not recompute");
        assert!(cache.hits > hits);
    }

    #[test]
    fn two_level_chain_matches_hand_composition() {
        // d(e_ir at i+1)/d(e_r at i) expanded by hand from the one-step
        // blocks: H_r^-1 W_r + W_r [A_n W_r + B_n W_g O + (-D^-1)(M + P)].
        let (_, _, _, trace) = small_problem(1, 1, 6);
        let blocks = DerivativeBlocks::from_trace(&trace);
        let i = 2;
        let bi = blocks.at(i, 0).unwrap().clone();
        let bn = blocks.at(i + 1, 0).unwrap().clone();

        let er_step = bn.er_from_eir_prev * bi.eir_from_er
            + bn.er_from_eig_prev * (bi.eig_from_eg * bi.eg_from_er)
            + bn.er_from_ei_prev * bi.ei_from_er
            + bn.er_from_ei_prev * (bi.eis_from_er * VoigtMat::identity());
        let expect = bn.eir_from_eir_prev * bi.eir_from_er + bn.eir_from_er * er_step;

        let mut tracer = Tracer::new(&blocks, 0, None);
        let got = tracer.eval(Field::Eir, i + 1, i).unwrap();
        let scale = expect.amax();
        assert!((got - expect).amax() / scale < 1e-14);
    }

    #[test]
    fn zero_propagation_blocks_give_zero_coupling() {
        let (mesh, _, _, trace) = small_problem(1, 1, 4);
        let zero = StepBlocks {
            er_from_eir_prev: VoigtMat::zeros(),
            er_from_eig_prev: VoigtMat::zeros(),
            er_from_ei_prev: VoigtMat::zeros(),
            eir_from_er: VoigtMat::zeros(),
            eir_from_eir_prev: VoigtMat::zeros(),
            eg_from_er: VoigtMat::zeros(),
            eg_from_eir_prev: VoigtMat::zeros(),
            eg_from_eig_prev: VoigtMat::zeros(),
            eig_from_eg: VoigtMat::zeros(),
            eig_from_eig_prev: VoigtMat::zeros(),
            ei_from_er: VoigtMat::zeros(),
            ei_from_eir_prev: VoigtMat::zeros(),
            eis_from_er: 0.0,
        };
        let blocks = DerivativeBlocks::from_step_blocks(
            (0..trace.n_steps()).map(|_| vec![zero.clone()]).collect(),
        );
        for i in 1..trace.n_steps() {
            for k in (i + 1)..=trace.n_steps() {
                let b = coupling_recursive(&mesh, &trace, &blocks, k, i, 0, 16).unwrap();
                assert_eq!(b.amax(), 0.0);
            }
        }
    }

    #[test]
    fn contract_violations_are_rejected() {
        let (mesh, _, _, trace) = small_problem(1, 1, 4);
        let blocks = DerivativeBlocks::from_trace(&trace);
        assert!(coupling_recursive(&mesh, &trace, &blocks, 2, 2, 0, 16).is_err());
        assert!(coupling_recursive(&mesh, &trace, &blocks, 1, 2, 0, 16).is_err());
        assert!(coupling_recursive(&mesh, &trace, &blocks, 9, 1, 0, 16).is_err());
        // Span above the cap must point at the memoized mode.
        assert!(coupling_recursive(&mesh, &trace, &blocks, 4, 1, 0, 2).is_err());
        let mut cache = CouplingCache::new();
        assert!(coupling_memoized(&mesh, &trace, &blocks, 4, 1, 0, &mut cache).is_ok());
    }

    /// Replays the strain-history chain of a single-element mesh with a
    /// perturbed step-i displacement, then re-evaluates the step-k residual.
    fn residual_at_k_with_perturbed_ui(
        mesh: &crate::mesh::Mesh,
        trace: &crate::fea::ForwardTrace,
        k: usize,
        i: usize,
        dof: usize,
        h: f64,
    ) -> DVector<f64> {
        let mut u_i = trace.records[i].u.clone();
        u_i[dof] += h;
        // Replay histories for steps i..k-1 (element 0; single-element mesh).
        let mut hist = trace.records[i - 1].histories.clone();
        for j in i..k {
            let rec = &trace.records[j];
            let u = if j == i { &u_i } else { &rec.u };
            let bms = element_b_all(mesh, 0).unwrap();
            let mut new_hist = Vec::with_capacity(4);
            for (gp, bm) in bms.iter().enumerate() {
                let eps_total = mesh.strain_at(0, bm, u);
                new_hist
                    .push(state_update(&rec.coeffs[0], &eps_total, &hist[0][gp], &rec.eps_th[0], j).unwrap());
            }
            hist = vec![new_hist];
        }
        // Residual of step k at the recorded u_k with the replayed history.
        let rec_k = &trace.records[k];
        let f_ext = external_force(mesh, rec_k.load_scale);
        let sys = assemble_system(mesh, &rec_k.coeffs, &hist, &rec_k.eps_th, &f_ext).unwrap();
        let mut u_free = DVector::zeros(mesh.n_free());
        for (fi, &fd) in mesh.free_dofs.iter().enumerate() {
            u_free[fi] = rec_k.u[fd];
        }
        &sys.k * &u_free - &sys.f
    }

    #[test]
    fn coupling_block_matches_residual_finite_difference() {
        // The whole chain is affine in u_i, so central FD is exact up to
        // roundoff for any step size.
        let (mesh, _, _, trace) = small_problem(1, 1, 5);
        let blocks = DerivativeBlocks::from_trace(&trace);
        let h = 1e-4;
        for (k, i) in [(2, 1), (3, 1), (3, 2), (5, 2)] {
            let block = coupling_recursive(&mesh, &trace, &blocks, k, i, 0, 16).unwrap();
            for (fi, &full_dof) in mesh.free_dofs.iter().enumerate() {
                let rp = residual_at_k_with_perturbed_ui(&mesh, &trace, k, i, full_dof, h);
                let rm = residual_at_k_with_perturbed_ui(&mesh, &trace, k, i, full_dof, -h);
                let fd_col = (rp - rm) / (2.0 * h);
                // Compare against the scattered element block column.
                let dofs = mesh.element_dofs(0);
                let local_col = dofs.iter().position(|d| *d == full_dof).unwrap();
                for (fj, &full_row) in mesh.free_dofs.iter().enumerate() {
                    let local_row = dofs.iter().position(|d| *d == full_row).unwrap();
                    let analytic = block[(local_row, local_col)];
                    let err = (analytic - fd_col[fj]).abs();
                    let scale = analytic.abs().max(fd_col.amax()).max(1e-9);
                    assert!(
                        err / scale < 1e-7,
                        "pair ({k},{i}) dof ({fi},{fj}): analytic {analytic:.6e} fd {:.6e}",
                        fd_col[fj]
                    );
                }
            }
        }
    }
}
