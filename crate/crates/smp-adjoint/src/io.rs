//! Artifact writers: VTK legacy ASCII and RFC-4180 CSV.
//!
//! CSV rows use CRLF line endings and contain only numeric or simple
//! unquoted fields. All writers format through Rust's shortest-roundtrip
//! float display, so identical data produces byte-identical files.

use crate::error::Result;
use crate::fd::VerificationReport;
use crate::fea::ForwardTrace;
use crate::mesh::Mesh;
use crate::optimize::OptHistory;
use nalgebra::DVector;
use std::fmt::Write as _;
use std::path::Path;

const CRLF: &str = "\r\n";

/// VTK legacy unstructured grid with optional point displacements and cell
/// densities.
pub fn vtk_string(
    mesh: &Mesh,
    title: &str,
    displacement: Option<&DVector<f64>>,
    density: Option<&[f64]>,
) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.n_nodes());
    for c in &mesh.coords {
        let _ = writeln!(out, "{} {} 0", c[0], c[1]);
    }
    let ne = mesh.n_elements();
    let _ = writeln!(out, "CELLS {} {}", ne, 5 * ne);
    for conn in &mesh.conn {
        let _ = writeln!(out, "4 {} {} {} {}", conn[0], conn[1], conn[2], conn[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {ne}");
    for _ in 0..ne {
        out.push_str("9\n");
    }
    if let Some(u) = displacement {
        let _ = writeln!(out, "POINT_DATA {}", mesh.n_nodes());
        out.push_str("VECTORS displacement double\n");
        for n in 0..mesh.n_nodes() {
            let _ = writeln!(out, "{} {} 0", u[2 * n], u[2 * n + 1]);
        }
    }
    if let Some(rho) = density {
        let _ = writeln!(out, "CELL_DATA {ne}");
        out.push_str("SCALARS density double 1\nLOOKUP_TABLE default\n");
        for v in rho {
            let _ = writeln!(out, "{v}");
        }
    }
    out
}

pub fn write_vtk(
    path: &Path,
    mesh: &Mesh,
    title: &str,
    displacement: Option<&DVector<f64>>,
    density: Option<&[f64]>,
) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, title, displacement, density))?;
    Ok(())
}

/// Per-step trace summary: step, temperature, load scale, objective-dof
/// displacement, residual norm.
pub fn trace_csv_string(trace: &ForwardTrace, objective_dof: usize) -> String {
    let mut out = String::new();
    let _ = write!(out, "step,temperature,load_scale,objective_displacement,residual_norm{CRLF}");
    for (i, rec) in trace.records.iter().enumerate() {
        let _ = write!(
            out,
            "{i},{},{},{},{}{CRLF}",
            rec.temperature, rec.load_scale, rec.u[objective_dof], rec.residual_norm
        );
    }
    out
}

/// Sensitivity vector: element id (1-based, matching the verification
/// table), value.
pub fn sensitivity_csv_string(sens: &[f64]) -> String {
    let mut out = String::new();
    let _ = write!(out, "element,sensitivity{CRLF}");
    for (e, v) in sens.iter().enumerate() {
        let _ = write!(out, "{},{v}{CRLF}", e + 1);
    }
    out
}

/// Verification report rows; omitted NE renders as an empty field.
pub fn report_csv_string(report: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "element,adjoint,fd,ne,status{CRLF}");
    for r in &report.rows {
        let ne = r.ne.map(|v| v.to_string()).unwrap_or_default();
        let status = match (&r.error, r.ne) {
            (Some(_), _) => "failed",
            (None, None) => "omitted",
            (None, Some(_)) => "ok",
        };
        let _ = write!(out, "{},{},{},{ne},{status}{CRLF}", r.element + 1, r.adjoint, r.fd);
    }
    out
}

/// Optimization history.
pub fn history_csv_string(history: &OptHistory) -> String {
    let mut out = String::new();
    let _ = write!(out, "iteration,objective,volume,max_change,wall_secs{CRLF}");
    for r in &history.0 {
        let _ = write!(
            out,
            "{},{},{},{},{}{CRLF}",
            r.iteration, r.theta, r.volume, r.max_change, r.wall_secs
        );
    }
    out
}

/// Bench timings: evaluation mode, coupling pair (k, i) or sweep length in
/// `k`, elapsed seconds.
pub fn bench_csv_string(rows: &[(String, usize, usize, f64)]) -> String {
    let mut out = String::new();
    let _ = write!(out, "mode,k,i,seconds{CRLF}");
    for (mode, k, i, secs) in rows {
        let _ = write!(out, "{mode},{k},{i},{secs}{CRLF}");
    }
    out
}
