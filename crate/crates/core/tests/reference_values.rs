//! Values checked against references computed independently with 40-digit
//! arithmetic (mpmath) and frozen here.

use std::f64::consts::PI;

use choreo::{action, collision_bound, potential, test_loop, BodySystem, UnitPoint};

/// (3/2) (12 pi)^(2/3) - 3 to 40 significant digits.
const BOUND_REF: f64 = 13.864_701_998_411_454_501_576_791_466_553_796;

/// Force function of the comparison loop's t = 0 configuration, unit masses.
const TEST_LOOP_U0_REF: f64 = 10.172_941_722_278_185_547_473_307_010_843_76;

#[test]
fn collision_bound_matches_high_precision() {
    assert!((collision_bound() - BOUND_REF).abs() < 1e-10 * BOUND_REF);
    // printed value, rounded to four decimals
    assert!((collision_bound() - 13.8647).abs() < 2e-3);
}

#[test]
fn test_loop_initial_potential() {
    let lp = test_loop(516).unwrap();
    let n = lp.len() as isize;
    let config = [lp.sample(0), lp.sample(n / 3), lp.sample(2 * n / 3)];
    let u = potential(&config, &[1.0; 3]).unwrap();
    assert!((u - TEST_LOOP_U0_REF).abs() < 1e-12 * TEST_LOOP_U0_REF, "{u}");
}

#[test]
fn equatorial_triangle_potential() {
    let pts: Vec<UnitPoint> = (0..3)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / 3.0;
            UnitPoint::new(a.cos(), a.sin(), 0.0).unwrap()
        })
        .collect();
    assert!((potential(&pts, &[1.0; 3]).unwrap() + 3f64.sqrt()).abs() < 1e-14);
}

#[test]
fn test_loop_action_and_bound() {
    let sys = BodySystem::equal_masses(3).unwrap();
    let a = action(&test_loop(516).unwrap(), &sys).unwrap();
    assert!((a.total - 13.76572).abs() < 1e-3, "{}", a.total);
    assert!(a.total < collision_bound());
    let b = action(&test_loop(1032).unwrap(), &sys).unwrap();
    assert!((a.total - b.total).abs() < 1e-6);
}
