//! Integrator and minimizer behaviour on three-body choreographies.

use std::sync::OnceLock;

use choreo::{
    action, closure_error, collision_bound, el_residual, energy, integrate, min_pair_separation, minimize,
    symmetry_residuals, test_loop, BodySystem, MinimizeOptions, PhaseState, Termination,
};

fn three() -> BodySystem {
    BodySystem::equal_masses(3).unwrap()
}

/// Initial state of a coarse action minimizer (240 samples).
fn coarse_orbit_state() -> PhaseState {
    static STATE: OnceLock<PhaseState> = OnceLock::new();
    STATE
        .get_or_init(|| {
            let opts = MinimizeOptions {
                grad_tol: 1e-7,
                ..Default::default()
            };
            let (min, _) = minimize(&test_loop(240).unwrap(), &three(), &opts).unwrap();
            PhaseState::from_loop(&min, &three()).unwrap()
        })
        .clone()
}

#[test]
fn energy_drift_falls_at_least_fourth_order() {
    let s0 = coarse_orbit_state();
    let drifts: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|h| integrate(&s0, &[1.0; 3], 1.0, *h).unwrap().energy_drift)
        .collect();
    for w in drifts.windows(2) {
        assert!(w[0] / w[1] > 16.0 * 0.7, "drifts {drifts:?}");
    }
}

#[test]
fn integration_is_time_reversible() {
    let s0 = coarse_orbit_state();
    let forward = integrate(&s0, &[1.0; 3], 0.5, 1e-3).unwrap();
    let end = forward.last();
    let flipped = PhaseState::new(end.positions.clone(), end.velocities.iter().map(|v| -v).collect()).unwrap();
    let back = integrate(&flipped, &[1.0; 3], 0.5, 1e-3).unwrap();
    let returned = back.last();
    let unflipped = PhaseState::new(
        returned.positions.clone(),
        returned.velocities.iter().map(|v| -v).collect(),
    )
    .unwrap();
    assert!(unflipped.sup_distance(&s0) < 1e-8, "{}", unflipped.sup_distance(&s0));
}

#[test]
fn trajectory_conserves_energy_and_constraints() {
    let s0 = coarse_orbit_state();
    let traj = integrate(&s0, &[1.0; 3], 1.0, 1e-3).unwrap();
    assert_eq!(traj.states.len(), 1001);
    let e0 = energy(&s0, &[1.0; 3]).unwrap();
    for s in &traj.states {
        assert!((energy(s, &[1.0; 3]).unwrap() - e0).abs() <= traj.energy_drift + 1e-15);
        for (q, v) in s.positions.iter().zip(&s.velocities) {
            assert!((q.vector().norm() - 1.0).abs() < 1e-14);
            assert!(q.vector().dot(v).abs() < 1e-12);
        }
    }
}

#[test]
fn coarse_minimization_lowers_action_below_collision_bound() {
    let lp = test_loop(240).unwrap();
    let sys = three();
    let opts = MinimizeOptions {
        grad_tol: 1e-7,
        ..Default::default()
    };
    let (min, report) = minimize(&lp, &sys, &opts).unwrap();
    assert_eq!(report.termination, Termination::Converged);
    assert!(report.action_history.windows(2).all(|w| w[1] < w[0]));
    let start = action(&lp, &sys).unwrap().total;
    assert!(report.final_action < start && start < collision_bound());
    assert!(report.below_collision_bound);
    assert!((action(&min, &sys).unwrap().total - report.final_action).abs() < 1e-10);
    assert_eq!(symmetry_residuals(&min), (0.0, 0.0));
    assert!(min_pair_separation(&min, &sys).unwrap() > 0.1);
    // a coarse minimizer still solves the equations of motion approximately
    assert!(el_residual(&min, &sys).unwrap() < 2e-3);
    assert!(closure_error(&min, &sys, 1e-3).unwrap() < 5e-4);
}
