//! Structured Q4 plane-strain mesh with 2x2 Gauss quadrature.
//!
//! Node ids run row-major (`iy * (nx + 1) + ix`); element ids run
//! column-major (`ix * ny + iy`) so that the elements of one x-column form a
//! contiguous bottom-to-top triple, matching the verification table layout.

use crate::error::{Error, Result};
use crate::voigt::VoigtVec;
use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

/// Strain-displacement operator of one quadrature point: 3x8 matrix plus the
/// quadrature weight times the Jacobian determinant.
#[derive(Debug, Clone)]
pub struct BMatrix {
    pub b: SMatrix<f64, 3, 8>,
    pub w_detj: f64,
}

/// Dof axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn offset(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Supported boundary-condition presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcPreset {
    /// Clamp both dofs of every node on the x = 0 edge.
    Cantilever,
    /// Roller setup for uniaxial stretch: u_x = 0 on the x = 0 edge,
    /// u_y = 0 on the y = 0 edge.
    Uniaxial,
}

/// A reference point load at a grid node.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointLoad {
    pub ix: usize,
    pub iy: usize,
    pub axis: Axis,
    /// Reference magnitude (N); the schedule's load scale multiplies it.
    pub value: f64,
}

/// Structured quadrilateral mesh with boundary conditions and the reference
/// load pattern.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Node coordinates, indexed by node id.
    pub coords: Vec<[f64; 2]>,
    /// Element connectivity (4 node ids, counter-clockwise from lower-left).
    pub conn: Vec<[usize; 4]>,
    /// Per-dof fixed flag (homogeneous Dirichlet).
    pub fixed: Vec<bool>,
    /// Reference external force, full dof vector entries.
    pub ref_loads: Vec<(usize, f64)>,
    /// Map full dof -> free dof index.
    pub free_index: Vec<Option<usize>>,
    /// Map free dof index -> full dof.
    pub free_dofs: Vec<usize>,
}

pub const GAUSS_2X2: [(f64, f64); 4] = {
    // 1/sqrt(3) written out; const fns cannot call sqrt.
    const G: f64 = 0.577_350_269_189_625_8;
    [(-G, -G), (G, -G), (G, G), (-G, G)]
};

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.conn.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn node_id(&self, ix: usize, iy: usize) -> Result<usize> {
        if ix > self.nx || iy > self.ny {
            return Err(Error::Config(format!(
                "node ({ix}, {iy}) outside grid {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(iy * (self.nx + 1) + ix)
    }

    pub fn dof_id(&self, ix: usize, iy: usize, axis: Axis) -> Result<usize> {
        Ok(2 * self.node_id(ix, iy)? + axis.offset())
    }

    /// Element id for grid position (column-major).
    pub fn element_id(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    /// (column, row) grid position of an element id.
    pub fn element_grid(&self, elem: usize) -> (usize, usize) {
        (elem / self.ny, elem % self.ny)
    }

    /// Element centroid coordinates.
    pub fn centroid(&self, elem: usize) -> [f64; 2] {
        let mut c = [0.0; 2];
        for n in &self.conn[elem] {
            c[0] += self.coords[*n][0];
            c[1] += self.coords[*n][1];
        }
        [c[0] / 4.0, c[1] / 4.0]
    }

    /// The 8 global dofs of an element in local order (ux0, uy0, ux1, ...).
    pub fn element_dofs(&self, elem: usize) -> [usize; 8] {
        let c = &self.conn[elem];
        [
            2 * c[0],
            2 * c[0] + 1,
            2 * c[1],
            2 * c[1] + 1,
            2 * c[2],
            2 * c[2] + 1,
            2 * c[3],
            2 * c[3] + 1,
        ]
    }

    /// Total strain at a quadrature point from the full displacement vector.
    pub fn strain_at(&self, elem: usize, bm: &BMatrix, u: &nalgebra::DVector<f64>) -> VoigtVec {
        let dofs = self.element_dofs(elem);
        let mut ue = SMatrix::<f64, 8, 1>::zeros();
        for (l, d) in dofs.iter().enumerate() {
            ue[l] = u[*d];
        }
        bm.b * ue
    }
}

/// Builds a structured `nx` x `ny` mesh of size `lx` x `ly` with the given
/// boundary-condition preset and reference loads.
pub fn build_mesh(
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    bc: BcPreset,
    loads: &[PointLoad],
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Config("nx and ny must be >= 1".into()));
    }
    if lx <= 0.0 || ly <= 0.0 {
        return Err(Error::Config("lx and ly must be positive".into()));
    }
    let n_nodes = (nx + 1) * (ny + 1);
    let mut coords = Vec::with_capacity(n_nodes);
    let (dx, dy) = (lx / nx as f64, ly / ny as f64);
    for iy in 0..=ny {
        for ix in 0..=nx {
            coords.push([ix as f64 * dx, iy as f64 * dy]);
        }
    }
    let mut conn = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            let n0 = iy * (nx + 1) + ix;
            let n1 = n0 + 1;
            let n2 = n1 + (nx + 1);
            let n3 = n0 + (nx + 1);
            conn.push([n0, n1, n2, n3]);
        }
    }

    let mut fixed = vec![false; 2 * n_nodes];
    match bc {
        BcPreset::Cantilever => {
            for iy in 0..=ny {
                let n = iy * (nx + 1);
                fixed[2 * n] = true;
                fixed[2 * n + 1] = true;
            }
        }
        BcPreset::Uniaxial => {
            for iy in 0..=ny {
                let n = iy * (nx + 1);
                fixed[2 * n] = true;
            }
            for ix in 0..=nx {
                fixed[2 * ix + 1] = true;
            }
        }
    }

    let mut free_index = vec![None; 2 * n_nodes];
    let mut free_dofs = Vec::new();
    for (d, fix) in fixed.iter().enumerate() {
        if !*fix {
            free_index[d] = Some(free_dofs.len());
            free_dofs.push(d);
        }
    }

    let mesh = Mesh {
        nx,
        ny,
        lx,
        ly,
        coords,
        conn,
        fixed,
        ref_loads: Vec::new(),
        free_index,
        free_dofs,
    };

    let mut ref_loads = Vec::with_capacity(loads.len());
    for l in loads {
        let dof = mesh.dof_id(l.ix, l.iy, l.axis)?;
        if mesh.fixed[dof] {
            return Err(Error::Config(format!(
                "load at node ({}, {}) axis {:?} targets a fixed dof",
                l.ix, l.iy, l.axis
            )));
        }
        ref_loads.push((dof, l.value));
    }
    Ok(Mesh { ref_loads, ..mesh })
}

/// Shape-function derivative based B-matrix at natural coordinates
/// `(xi, eta)` of the element, with `weight` the Gauss weight.
pub fn b_matrix_at(mesh: &Mesh, elem: usize, xi: f64, eta: f64, weight: f64) -> Result<BMatrix> {
    let nodes = &mesh.conn[elem];
    // dN/dxi, dN/deta for the bilinear quad, CCW node order.
    let dn_dxi = [
        -(1.0 - eta) / 4.0,
        (1.0 - eta) / 4.0,
        (1.0 + eta) / 4.0,
        -(1.0 + eta) / 4.0,
    ];
    let dn_deta = [
        -(1.0 - xi) / 4.0,
        -(1.0 + xi) / 4.0,
        (1.0 + xi) / 4.0,
        (1.0 - xi) / 4.0,
    ];
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        let [x, y] = mesh.coords[nodes[a]];
        j[0][0] += dn_dxi[a] * x;
        j[0][1] += dn_dxi[a] * y;
        j[1][0] += dn_deta[a] * x;
        j[1][1] += dn_deta[a] * y;
    }
    let detj = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if detj <= 0.0 || !detj.is_finite() {
        return Err(Error::Contract(format!(
            "degenerate element {elem}: det J = {detj:.3e}"
        )));
    }
    let inv = [
        [j[1][1] / detj, -j[0][1] / detj],
        [-j[1][0] / detj, j[0][0] / detj],
    ];
    let mut b = SMatrix::<f64, 3, 8>::zeros();
    for a in 0..4 {
        let dndx = inv[0][0] * dn_dxi[a] + inv[0][1] * dn_deta[a];
        let dndy = inv[1][0] * dn_dxi[a] + inv[1][1] * dn_deta[a];
        b[(0, 2 * a)] = dndx;
        b[(1, 2 * a + 1)] = dndy;
        b[(2, 2 * a)] = dndy;
        b[(2, 2 * a + 1)] = dndx;
    }
    Ok(BMatrix {
        b,
        w_detj: weight * detj,
    })
}

/// B-matrix of one of the four 2x2 Gauss points.
pub fn element_b(mesh: &Mesh, elem: usize, gp: usize) -> Result<BMatrix> {
    let (xi, eta) = GAUSS_2X2[gp];
    b_matrix_at(mesh, elem, xi, eta, 1.0)
}

/// All four Gauss-point B-matrices of an element.
pub fn element_b_all(mesh: &Mesh, elem: usize) -> Result<[BMatrix; 4]> {
    Ok([
        element_b(mesh, elem, 0)?,
        element_b(mesh, elem, 1)?,
        element_b(mesh, elem, 2)?,
        element_b(mesh, elem, 3)?,
    ])
}
