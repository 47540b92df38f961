//! Linear solvers for the step systems.
//!
//! The tangent is symmetric positive definite after boundary conditions, so
//! the default path is a sparse Cholesky factorization followed by one step
//! of iterative refinement. A Jacobi-preconditioned conjugate-gradient
//! solver is available behind a config switch. Both are single-threaded and
//! bitwise deterministic.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;
use serde::{Deserialize, Serialize};

/// Which linear solver to use for the step systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolverKind {
    Direct,
    Iterative,
}

/// A factorized (or otherwise prepared) step operator.
pub struct StepSolver<'a> {
    k: &'a CscMatrix<f64>,
    kind: SolverImpl,
    tol: f64,
}

enum SolverImpl {
    Direct(CscCholesky<f64>),
    Iterative,
}

impl<'a> StepSolver<'a> {
    /// Prepares a solver for `k`; for the direct path this performs the
    /// Cholesky factorization.
    pub fn new(k: &'a CscMatrix<f64>, kind: LinearSolverKind, tol: f64) -> Result<Self> {
        let imp = match kind {
            LinearSolverKind::Direct => {
                let chol = CscCholesky::factor(k).map_err(|e| {
                    Error::Solver(format!(
                        "Cholesky factorization failed on {} free dofs: {e}",
                        k.nrows()
                    ))
                })?;
                SolverImpl::Direct(chol)
            }
            LinearSolverKind::Iterative => SolverImpl::Iterative,
        };
        Ok(Self { k, kind: imp, tol })
    }

    fn solve_once(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.kind {
            SolverImpl::Direct(chol) => {
                let rhs = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
                let x = chol.solve(&rhs);
                Ok(DVector::from_column_slice(x.column(0).as_slice()))
            }
            SolverImpl::Iterative => conjugate_gradient(self.k, b, self.tol),
        }
    }

    /// Solves `K x = b` with iterative refinement against a compensated
    /// residual, returning the solution and the achieved absolute residual
    /// norm. The compensated residual keeps the refined solution coherent
    /// under tiny parameter perturbations well below the factorization's
    /// kappa * eps floor, which the finite-difference oracle relies on.
    /// Fails if the relative residual exceeds the tolerance.
    pub fn solve(&self, b: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
        let mut x = self.solve_once(b)?;
        let mut res = f64::INFINITY;
        for _ in 0..3 {
            let r = accurate_residual(self.k, &x, b);
            let norm = r.norm();
            if !norm.is_finite() || norm >= res {
                break;
            }
            res = norm;
            if norm == 0.0 {
                break;
            }
            let dx = self.solve_once(&r)?;
            x += &dx;
        }
        let r = accurate_residual(self.k, &x, b);
        let res = r.norm().min(res);
        // Backward-error metric: robust to conditioning, floor ~ n * eps.
        let k_inf = matrix_inf_norm(self.k);
        let scale = k_inf * x.norm() + b.norm();
        let rel = if scale > 0.0 { res / scale } else { res };
        if !rel.is_finite() || rel > self.tol.max(1e-30) {
            let worst = r.iter().map(|v| v.abs()).enumerate().fold(
                (0usize, 0.0f64),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
            return Err(Error::Solver(format!(
                "step solve residual {rel:.3e} exceeds tolerance {:.1e} (worst free dof {} with |r| = {:.3e})",
                self.tol, worst.0, worst.1
            )));
        }
        Ok((x, res))
    }
}

/// Infinity norm (max absolute row sum) of a sparse matrix.
fn matrix_inf_norm(k: &CscMatrix<f64>) -> f64 {
    let mut row_sums = vec![0.0f64; k.nrows()];
    for (row, _, v) in k.triplet_iter() {
        row_sums[row] += v.abs();
    }
    row_sums.into_iter().fold(0.0, f64::max)
}

/// Residual `b - K x` with error-free products (FMA split) and Neumaier
/// compensated accumulation, accurate to O(eps |b - K x|) instead of
/// O(eps ||K|| ||x||).
pub fn accurate_residual(k: &CscMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = b.len();
    let mut sum = vec![0.0f64; n];
    let mut comp = vec![0.0f64; n];
    // Seed with b so the subtraction participates in the compensation.
    for i in 0..n {
        sum[i] = b[i];
    }
    for (row, col, v) in k.triplet_iter() {
        let a = -*v;
        let prod = a * x[col];
        // FMA recovers the product's rounding error exactly.
        let err = a.mul_add(x[col], -prod);
        // Neumaier two-sum of prod into (sum, comp) of the row.
        let t = sum[row] + prod;
        if sum[row].abs() >= prod.abs() {
            comp[row] += (sum[row] - t) + prod;
        } else {
            comp[row] += (prod - t) + sum[row];
        }
        sum[row] = t;
        comp[row] += err;
    }
    DVector::from_fn(n, |i, _| sum[i] + comp[i])
}

/// Convenience wrapper: factor and solve a single system.
pub fn solve_step(
    k: &CscMatrix<f64>,
    b: &DVector<f64>,
    kind: LinearSolverKind,
    tol: f64,
) -> Result<(DVector<f64>, f64)> {
    StepSolver::new(k, kind, tol)?.solve(b)
}

/// Jacobi-preconditioned conjugate gradients.
fn conjugate_gradient(k: &CscMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    let n = b.len();
    let mut diag = DVector::from_element(n, 1.0);
    for (i, j, v) in k.triplet_iter() {
        if i == j && *v != 0.0 {
            diag[i] = *v;
        }
    }
    let mut x = DVector::zeros(n);
    let mut r = b.clone();
    let b_norm = b.norm().max(f64::MIN_POSITIVE);
    if r.norm() / b_norm <= tol {
        return Ok(x);
    }
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let max_iter = 20 * n.max(50);
    for _ in 0..max_iter {
        let kp = k * &p;
        let alpha = rz / p.dot(&kp);
        x += alpha * &p;
        r -= alpha * &kp;
        if r.norm() / b_norm <= 0.1 * tol {
            return Ok(x);
        }
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * &p;
        rz = rz_new;
    }
    Err(Error::Solver(format!(
        "conjugate gradients failed to reach {tol:.1e} in {max_iter} iterations (residual {:.3e})",
        r.norm() / b_norm
    )))
}
