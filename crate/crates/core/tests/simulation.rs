use pipestab::analysis::{first_increase, max_decay_rate, weighted_lyapunov_series, DecayOptions};
use pipestab::lmi::assemble;
use pipestab::model::{build_closed_loop, ControllerParams, PlantParams};
use pipestab::sdp::{solve_feasibility, SolverOptions, Status};
use pipestab::sim::{export_csv, fit_decay, simulate, InitialCondition, SimConfig};

fn plant() -> PlantParams {
    PlantParams::default()
}

#[test]
fn equilibrium_is_held_for_five_seconds() {
    let p = plant();
    let cfg = SimConfig::new(p.c, 200, 0.9, 5.0, 10, InitialCondition::Equilibrium);
    let trace = simulate(&p, &ControllerParams::feedforward(), &cfg).unwrap();
    let worst = trace
        .states
        .iter()
        .flat_map(|s| s.field_errors(&p).0)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst <= 1e-8, "{worst}");
}

#[test]
fn feedforward_decay_is_at_least_certified() {
    let p = plant();
    let ctrl = ControllerParams::feedforward();
    let trace = simulate(&p, &ctrl, &SimConfig::default_for(&p)).unwrap();
    let fit = fit_decay(&trace, (5.0, 22.5)).unwrap();
    let best = (0..=3)
        .map(|n| {
            max_decay_rate(&p, &ctrl, n, &DecayOptions::default())
                .unwrap()
                .alpha
                .unwrap()
        })
        .fold(0.0f64, f64::max);
    assert!(fit.alpha >= 0.95 * best, "{} vs {best}", fit.alpha);
}

#[test]
fn reference_start_is_incompatible_only_at_the_top() {
    let p = plant();
    let trace = simulate(&p, &ControllerParams::feedforward(), &SimConfig::default_for(&p)).unwrap();
    assert!(trace.initial_residuals.at_0.abs() > 1.0);
    assert!(trace.initial_residuals.at_1.abs() < 1e-9);
}

#[test]
fn interior_certificate_decreases_along_smooth_trajectory() {
    let p = plant();
    let ctrl = ControllerParams::feedforward();
    let cl = build_closed_loop(&p, &ctrl).unwrap();
    let opts = SolverOptions {
        stop_when_decided: false,
        ..Default::default()
    };
    let rep = solve_feasibility(&assemble(1, &cl, &p), 0.1, &opts).unwrap();
    assert_eq!(rep.status, Status::Feasible);
    let cert = rep.certificate.unwrap();
    let ic = InitialCondition::Perturbed {
        seed: 5,
        amplitude: 0.5,
    };
    let trace = simulate(&p, &ctrl, &SimConfig::new(p.c, 200, 0.9, 10.0, 10, ic)).unwrap();
    let series = weighted_lyapunov_series(&cert, &p, &trace).unwrap();
    assert_eq!(first_increase(&trace.times(), &series, 0.02), None);
}

#[test]
fn csv_export_is_deterministic() {
    let p = plant();
    let cfg = SimConfig::new(
        p.c,
        100,
        0.9,
        2.0,
        5,
        InitialCondition::Perturbed {
            seed: 11,
            amplitude: 0.3,
        },
    );
    let dir = tempfile::tempdir().unwrap();
    let bytes: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = dir.path().join(format!("run{i}.csv"));
            let trace = simulate(&p, &ControllerParams::reference_dynamic(), &cfg).unwrap();
            export_csv(&trace, &path).unwrap();
            std::fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(bytes[0], bytes[1]);
}
