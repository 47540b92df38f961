// temporary tuning probe (deleted before ship)
use smp_adjoint::config::parse_config_str;
use smp_adjoint::fd::{verify_report, FdScheme};

fn run_case(tag: &str, mutate: impl Fn(&mut serde_json::Value)) {
    let preset = std::fs::read_to_string("crates/smp-adjoint/presets/verify45.json").unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&preset).unwrap();
    mutate(&mut v);
    let cfg = parse_config_str(&v.to_string()).unwrap();
    let problem = cfg.problem().unwrap();
    let rho = vec![cfg.raw.design.initial_rho; problem.mesh.n_elements()];
    let report = verify_report(&problem, &rho, FdScheme::Central, 1e-6, 1e-3).unwrap();
    let s: Vec<f64> = report.rows.iter().map(|r| r.adjoint).collect();
    let max_s = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut fails = Vec::new();
    for c in 0..15 {
        let small_mid = s[c * 3 + 1].abs() < 1e-3 * max_s;
        let flip = s[c * 3] * s[c * 3 + 2] < 0.0;
        if !(small_mid && flip) {
            fails.push(c + 1);
        }
    }
    println!(
        "{tag}: maxNE={:.2e} omit={} theta={:.3e} badcols={:?}",
        report.max_ne, report.omitted, report.theta, fails
    );
}

fn main() {
    run_case("t330 iy2        ", |v| {
        v["schedule"]["t_ref"] = serde_json::json!(330.0);
    });
    run_case("t330 iy3        ", |v| {
        v["schedule"]["t_ref"] = serde_json::json!(330.0);
        v["objective"]["node"]["iy"] = serde_json::json!(3);
    });
    run_case("t330 iy3 a/5    ", |v| {
        v["schedule"]["t_ref"] = serde_json::json!(330.0);
        v["objective"]["node"]["iy"] = serde_json::json!(3);
        v["material"]["rubbery"]["alpha"] = serde_json::json!({"lo": 4e-7, "hi": 4e-5});
        v["material"]["glassy"]["alpha"] = serde_json::json!({"lo": 2e-7, "hi": 2e-5});
    });
    run_case("t330 iy3 s.15   ", |v| {
        v["schedule"]["t_ref"] = serde_json::json!(330.0);
        v["objective"]["node"]["iy"] = serde_json::json!(3);
        v["material"]["phase_law"]["steepness"] = serde_json::json!(0.15);
    });
}
