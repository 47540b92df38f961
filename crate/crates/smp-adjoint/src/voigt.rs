//! 2D plane-strain Voigt notation: symmetric second-order tensors as
//! 3-vectors `[e_xx, e_yy, g_xy]` (engineering shear, `g_xy = 2 e_xy`) and
//! fourth-order isotropic operators as 3x3 matrices acting on them.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};

/// Strain or stress in Voigt form: `[xx, yy, xy]` with engineering shear.
pub type VoigtVec = Vector3<f64>;

/// Fourth-order stiffness-like operator in Voigt form (3x3, plane strain).
pub type VoigtMat = Matrix3<f64>;

/// Isotropic plane-strain stiffness for Young's modulus `e` and Poisson
/// ratio `nu`, engineering-shear convention.
pub fn isotropic_stiffness(e: f64, nu: f64) -> VoigtMat {
    let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let d = c * (1.0 - nu);
    let o = c * nu;
    let g = c * (1.0 - 2.0 * nu) / 2.0;
    VoigtMat::new(d, o, 0.0, o, d, 0.0, 0.0, 0.0, g)
}

/// Voigt vector with equal normal components and no shear, e.g. thermal
/// expansion `s * [1, 1, 0]`.
pub fn hydrostatic(s: f64) -> VoigtVec {
    VoigtVec::new(s, s, 0.0)
}

/// Inverts `m`, reporting the tensor's name on (near-)singularity.
pub fn try_invert(m: &VoigtMat, name: &'static str) -> Result<VoigtMat> {
    let det = m.determinant();
    // Scale-aware singularity test: dimensionless tensors have O(1) norms,
    // stiffness tensors O(E); compare det against norm^3.
    let scale = m.norm();
    if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(3).max(f64::MIN_POSITIVE) {
        return Err(Error::SingularOperator {
            name,
            detail: format!("det = {det:.3e}, norm = {scale:.3e}"),
        });
    }
    m.try_inverse().ok_or_else(|| Error::SingularOperator {
        name,
        detail: "inversion failed".to_string(),
    })
}

/// Max-norm relative asymmetry `|m - m^T| / |m|`.
pub fn relative_asymmetry(m: &VoigtMat) -> f64 {
    let asym = (m - m.transpose()).amax();
    let scale = m.amax();
    if scale == 0.0 {
        0.0
    } else {
        asym / scale
    }
}
