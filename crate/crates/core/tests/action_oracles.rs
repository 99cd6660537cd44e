//! Loop-space checks of the discrete action: finite-difference gradients,
//! invariances, and the closed-form comparison loop.

use std::f64::consts::PI;

use choreo::{
    action, action_gradient, action_of_paths, action_via_paths, build_choreography, loop_velocities, potential,
    symmetrize, symmetrize_field, test_loop, velocity_identity_residual, BodySystem, DiscreteLoop, UnitPoint, Vec3,
};
use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn three() -> BodySystem {
    BodySystem::equal_masses(3).unwrap()
}

/// The comparison loop plus a few random low Fourier modes.
fn smooth_random_loop(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> DiscreteLoop {
    let base = test_loop(n).unwrap();
    let coeffs: Vec<[f64; 6]> = (0..4)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-amp..amp)))
        .collect();
    let samples = base
        .samples()
        .iter()
        .enumerate()
        .map(|(j, p)| {
            let t = 2.0 * PI * j as f64 / n as f64;
            let mut v = *p.vector();
            for (k, c) in coeffs.iter().enumerate() {
                let (s, co) = ((k + 1) as f64 * t).sin_cos();
                v += Vec3::new(c[0] * s + c[1] * co, c[2] * s + c[3] * co, c[4] * s + c[5] * co);
            }
            UnitPoint::normalize(v).unwrap()
        })
        .collect();
    DiscreteLoop::new(samples).unwrap()
}

fn random_tangent_field(rng: &mut ChaCha8Rng, lp: &DiscreteLoop) -> Vec<Vec3> {
    lp.samples()
        .iter()
        .map(|p| {
            p.project(&Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ))
        })
        .collect()
}

fn moved(lp: &DiscreteLoop, dir: &[Vec3], s: f64) -> DiscreteLoop {
    DiscreteLoop::new(
        lp.samples()
            .iter()
            .zip(dir)
            .map(|(p, d)| UnitPoint::normalize(p.vector() + d * s).unwrap())
            .collect(),
    )
    .unwrap()
}

fn pairing(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

#[test]
fn action_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let systems = [three(), BodySystem::choreography(vec![1.0, 0.6, 1.5]).unwrap()];
    let step = 1e-6;
    for trial in 0..120 {
        let sys = &systems[trial % 2];
        let lp = smooth_random_loop(&mut rng, 96, 0.05);
        let dir = random_tangent_field(&mut rng, &lp);
        let grad = action_gradient(&lp, sys).unwrap();
        let plus = action(&moved(&lp, &dir, step), sys).unwrap().total;
        let minus = action(&moved(&lp, &dir, -step), sys).unwrap().total;
        let fd = (plus - minus) / (2.0 * step);
        let exact = pairing(&grad.total, &dir);
        let rel = (fd - exact).abs() / exact.abs().max(1e-3);
        assert!(
            rel < 1e-5,
            "trial {trial}: fd {fd}, gradient {exact}, relative error {rel}"
        );
        // the two parts add up and each is tangent
        for (k, p) in lp.samples().iter().enumerate() {
            assert!((grad.kinetic[k] + grad.potential[k] - grad.total[k]).amax() < 1e-12);
            assert!(p.vector().dot(&grad.total[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn piecewise_constant_triangle_has_no_potential_gradient() {
    let corners: Vec<UnitPoint> = (0..3)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / 3.0;
            UnitPoint::new(a.cos(), a.sin(), 0.0).unwrap()
        })
        .collect();
    let lp = DiscreteLoop::new((0..12).map(|j| corners[j / 4]).collect()).unwrap();
    let grad = action_gradient(&lp, &three()).unwrap();
    assert!(grad.potential.iter().all(|g| g.norm() < 1e-14));
    assert!((action(&lp, &three()).unwrap().potential_integral + 3f64.sqrt()).abs() < 1e-14);
}

#[test]
fn gradient_of_symmetric_loop_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let lp = symmetrize(&smooth_random_loop(&mut rng, 120, 0.08)).unwrap();
        let g = action_gradient(&lp, &three()).unwrap().total;
        let gs = symmetrize_field(&g);
        let diff = g.iter().zip(&gs).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
    }
}

#[test]
fn fast_action_agrees_with_per_body_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for masses in [vec![1.0; 3], vec![2.0, 0.5, 1.0], vec![1.0; 4], vec![1.0, 1.0]] {
        let sys = BodySystem::choreography(masses).unwrap();
        let lp = smooth_random_loop(&mut rng, 48, 0.05);
        let Ok(fast) = action(&lp, &sys) else { continue };
        let slow = action_via_paths(&lp, &sys).unwrap();
        assert!((fast.total - slow.total).abs() < 1e-10 * fast.total.abs().max(1.0));
    }
}

#[test]
fn general_paths_reduce_to_potential_for_static_bodies() {
    let pts = [
        UnitPoint::new(1.0, 0.0, 0.0).unwrap(),
        UnitPoint::new(0.0, 0.6, 0.8).unwrap(),
    ];
    let paths: Vec<DiscreteLoop> = pts.iter().map(|p| DiscreteLoop::constant(*p, 10).unwrap()).collect();
    let a = action_of_paths(&paths, &[1.0, 2.0]).unwrap();
    assert_eq!(a.kinetic, 0.0);
    assert!((a.total - potential(&pts, &[1.0, 2.0]).unwrap()).abs() < 1e-14);
}

#[test]
fn comparison_loop_reference_value() {
    let a = action(&test_loop(516).unwrap(), &three()).unwrap();
    assert!((a.total - 13.76572).abs() < 1e-3, "{}", a.total);
    // sample-count convergence
    let b = action(&test_loop(1032).unwrap(), &three()).unwrap();
    assert!((a.total - b.total).abs() < 1e-6);
}

#[test]
fn velocity_identity_holds_along_choreographies() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in 2..=6 {
        let lp = smooth_random_loop(&mut rng, 120, 0.1);
        let v = loop_velocities(&lp);
        let bodies = build_choreography(&lp, &BodySystem::equal_masses(n).unwrap()).unwrap();
        assert_eq!(bodies.len(), n);
        let shift = 120 / n;
        for j in 0..120 {
            let vs: Vec<Vec3> = (0..n).map(|i| v[(j + i * shift) % 120]).collect();
            let scale: f64 = vs.iter().map(|x| x.norm_squared()).sum();
            assert!(velocity_identity_residual(&vs) < 1e-12 * scale.max(1.0));
        }
    }
}

fn rotation() -> impl Strategy<Value = Rotation3<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..2.0 * PI)
        .prop_filter("axis", |(x, y, z, _)| x * x + y * y + z * z > 1e-2)
        .prop_map(|(x, y, z, a)| Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::new(x, y, z)), a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn action_is_rotation_and_shift_invariant(seed in 0u64..1_000_000, rot in rotation(), k in 0isize..96) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = smooth_random_loop(&mut rng, 96, 0.05);
        let a = action(&lp, &three()).unwrap().total;
        let r = action(&lp.rotated(rot.matrix()).unwrap(), &three()).unwrap().total;
        let s = action(&lp.shifted(k), &three()).unwrap().total;
        prop_assert!((a - r).abs() < 1e-10 * a.abs());
        prop_assert!((a - s).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn symmetrize_is_idempotent(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp = symmetrize(&smooth_random_loop(&mut rng, 48, 0.1)).unwrap();
        prop_assert!(symmetrize(&lp).unwrap().max_abs_diff(&lp) < 1e-14);
    }

    #[test]
    fn velocity_identity_on_random_vectors(
        vs in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0), 1..8),
    ) {
        let vs: Vec<Vec3> = vs.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect();
        let scale: f64 = vs.iter().map(|v| v.norm_squared()).sum();
        prop_assert!(velocity_identity_residual(&vs) < 1e-12 * scale.max(1.0) * vs.len() as f64);
    }
}
