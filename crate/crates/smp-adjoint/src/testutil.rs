//! Shared fixtures for the unit tests.

use crate::fea::{run_cycle, ForwardTrace, SolverOptions};
use crate::material::{Interp, PhaseConstants, PhaseLaw, PhaseParams};
use crate::mesh::{build_mesh, Axis, BcPreset, Mesh, PointLoad};
use crate::schedule::{PhaseTag, Schedule, ScheduleStep};

pub fn toy_params() -> PhaseParams {
    // lo/hi ratios deliberately differ between moduli and viscosities so
    // ratios like K_neq/eta keep a nonzero design derivative.
    PhaseParams {
        rubbery: PhaseConstants {
            e_eq: Interp { lo: 2.0e4, hi: 2.0e6 },
            e_neq: Interp { lo: 1.0e4, hi: 1.0e6 },
            eta: Interp { lo: 5.0e5, hi: 1.0e7 },
            alpha: Interp { lo: 2.0e-6, hi: 2.0e-4 },
        },
        glassy: PhaseConstants {
            e_eq: Interp { lo: 1.0e7, hi: 1.0e9 },
            e_neq: Interp { lo: 1.0e7, hi: 1.0e9 },
            eta: Interp { lo: 2.0e10, hi: 1.0e12 },
            alpha: Interp { lo: 1.0e-6, hi: 1.0e-4 },
        },
        eta_i: Interp { lo: 5.0e8, hi: 1.0e10 },
        nu: 0.35,
        t_g: 320.0,
        phase_law: PhaseLaw::Logistic {
            steepness: 0.2,
            rho_tg_shift: 0.0,
        },
        penal: 3.0,
        rho_min: 0.1,
    }
}

/// Consistent nodal lumping of a uniform x-traction on the free edge.
pub fn axial_tip_loads(nx: usize, ny: usize, total: f64) -> Vec<PointLoad> {
    (0..=ny)
        .map(|iy| {
            let w = if iy == 0 || iy == ny { 0.5 } else { 1.0 };
            PointLoad {
                ix: nx,
                iy,
                axis: Axis::X,
                value: total * w / ny as f64,
            }
        })
        .collect()
}

/// Load -> cool -> relax -> heat cycle with the load active through cooling.
pub fn four_phase_schedule() -> Schedule {
    let mut steps = Vec::new();
    let mut push = |dt: f64, t: f64, load: f64, tag: PhaseTag| {
        steps.push(ScheduleStep {
            dt,
            temperature: t,
            load_scale: load,
            tag,
        })
    };
    push(1.0, 370.0, 0.5, PhaseTag::Load);
    push(1.0, 370.0, 1.0, PhaseTag::Load);
    push(1.0, 350.0, 1.0, PhaseTag::Cool);
    push(1.0, 330.0, 1.0, PhaseTag::Cool);
    push(1.0, 310.0, 1.0, PhaseTag::Cool);
    push(1.0, 290.0, 1.0, PhaseTag::Cool);
    push(1.0, 290.0, 0.0, PhaseTag::Relax);
    push(1.0, 290.0, 0.0, PhaseTag::Relax);
    push(1.0, 310.0, 0.0, PhaseTag::Heat);
    push(1.0, 330.0, 0.0, PhaseTag::Heat);
    push(1.0, 350.0, 0.0, PhaseTag::Heat);
    push(1.0, 370.0, 0.0, PhaseTag::Heat);
    Schedule {
        t_initial: 370.0,
        t_ref: 370.0,
        steps,
    }
}

/// Small cantilever problem with an axially loaded cooling cycle, solved.
pub fn small_problem(nx: usize, ny: usize, n_steps: usize) -> (Mesh, Schedule, PhaseParams, ForwardTrace) {
    let params = toy_params();
    let loads = axial_tip_loads(nx, ny, 0.02);
    let mesh = build_mesh(nx, ny, 0.01 * nx as f64, 0.005 * ny as f64, BcPreset::Cantilever, &loads)
        .unwrap();
    let full = four_phase_schedule();
    let schedule = Schedule {
        t_initial: full.t_initial,
        t_ref: full.t_ref,
        steps: full.steps[..n_steps.min(full.steps.len())].to_vec(),
    };
    let rho: Vec<f64> = (0..mesh.n_elements())
        .map(|e| 0.25 + 0.5 * ((e as f64 * 0.7).sin() * 0.5 + 0.5) * 0.8)
        .collect();
    let trace = run_cycle(&mesh, &rho, &schedule, &params, &SolverOptions::default()).unwrap();
    (mesh, schedule, params, trace)
}
