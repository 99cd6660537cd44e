//! Discrete Lagrangian action of a choreography and its exact gradient.
//!
//! The action over one period is approximated by the rectangle rule on the
//! `N` uniform samples,
//!
//! ```text
//! A = (1/N) sum_j [ 1/2 sum_i m_i |v_i(j)|^2 + U(q(j)) ]
//! ```
//!
//! with velocities from the fourth-order central difference stencil on the
//! cyclic samples. The gradient returned by [`action_gradient`] is the exact
//! derivative of this discrete functional, so it can be checked against
//! finite differences to roundoff.

use std::f64::consts::PI;

use crate::choreography::{build_choreography, BodySystem, DiscreteLoop};
use crate::error::{Error, Result};
use crate::geometry::{gradient_raw, pair_cot, potential_raw, Vec3};

#[inline]
fn wrap(j: isize, n: usize) -> usize {
    j.rem_euclid(n as isize) as usize
}

/// Fourth-order central first difference of a cyclic sequence, without the
/// `1/h` factor: `(8 (x_{j+1} - x_{j-1}) - (x_{j+2} - x_{j-2})) / 12`.
/// Symmetric pairs are differenced first so constant sequences give exact zeros.
#[inline]
fn first_difference(x: &[Vec3], j: isize) -> Vec3 {
    let n = x.len();
    let at = |o: isize| x[wrap(j + o, n)];
    ((at(1) - at(-1)) * 8.0 - (at(2) - at(-2))) / 12.0
}

/// Fourth-order central second difference, without the `1/h^2` factor.
#[inline]
fn second_difference(x: &[Vec3], j: isize) -> Vec3 {
    let n = x.len();
    let at = |o: isize| x[wrap(j + o, n)];
    ((at(1) + at(-1)) * 16.0 - (at(2) + at(-2)) - at(0) * 30.0) / 12.0
}

pub(crate) fn velocities_of(points: &[Vec3]) -> Vec<Vec3> {
    let n = points.len() as f64;
    (0..points.len() as isize)
        .map(|j| first_difference(points, j) * n)
        .collect()
}

pub(crate) fn accelerations_of(points: &[Vec3]) -> Vec<Vec3> {
    let n = points.len() as f64;
    (0..points.len() as isize)
        .map(|j| second_difference(points, j) * (n * n))
        .collect()
}

/// Fourth-order central-difference velocities `dQ/dt` at every sample.
pub fn loop_velocities(lp: &DiscreteLoop) -> Vec<Vec3> {
    velocities_of(&lp.vectors())
}

/// Fourth-order central-difference accelerations `d^2Q/dt^2` at every sample.
pub fn loop_accelerations(lp: &DiscreteLoop) -> Vec<Vec3> {
    accelerations_of(&lp.vectors())
}

/// Kinetic and potential contributions to the action over one period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionBreakdown {
    pub kinetic: f64,
    pub potential_integral: f64,
    pub total: f64,
}

impl ActionBreakdown {
    fn new(kinetic: f64, potential_integral: f64) -> Self {
        ActionBreakdown {
            kinetic,
            potential_integral,
            total: kinetic + potential_integral,
        }
    }
}

/// Positions of all bodies at sample `j`, written into `buf`.
#[inline]
fn configuration(points: &[Vec3], shifts: &[usize], j: usize, buf: &mut [Vec3]) {
    let n = points.len();
    for (slot, s) in buf.iter_mut().zip(shifts) {
        *slot = points[(j + s) % n];
    }
}

/// Action of a general periodic `n`-body path given as one sampled loop
/// per body.
pub fn action_of_paths(paths: &[DiscreteLoop], masses: &[f64]) -> Result<ActionBreakdown> {
    if paths.len() != masses.len() || paths.is_empty() {
        return Err(Error::InvalidSystem(format!(
            "{} paths but {} masses",
            paths.len(),
            masses.len()
        )));
    }
    let samples = paths[0].len();
    if paths.iter().any(|p| p.len() != samples) {
        return Err(Error::InvalidLoop("paths have different sample counts".into()));
    }
    let h = 1.0 / samples as f64;
    let vectors: Vec<Vec<Vec3>> = paths.iter().map(|p| p.vectors()).collect();
    let velocities: Vec<Vec<Vec3>> = vectors.iter().map(|v| velocities_of(v)).collect();

    let mut kinetic = 0.0;
    let mut potential = 0.0;
    let mut config = vec![Vec3::zeros(); paths.len()];
    for j in 0..samples {
        for (i, vel) in velocities.iter().enumerate() {
            kinetic += 0.5 * masses[i] * vel[j].norm_squared();
            config[i] = vectors[i][j];
        }
        potential += potential_raw(&config, masses).map_err(|e| e.at_sample(j))?;
    }
    Ok(ActionBreakdown::new(kinetic * h, potential * h))
}

/// Discrete action of the choreography generated by `lp`.
pub fn action(lp: &DiscreteLoop, system: &BodySystem) -> Result<ActionBreakdown> {
    let shifts = system.sample_shifts(lp.len())?;
    let points = lp.vectors();
    let samples = points.len();
    let h = 1.0 / samples as f64;
    let masses = system.masses();

    // every body runs through every velocity sample exactly once
    let speed_sq: f64 = velocities_of(&points).iter().map(|v| v.norm_squared()).sum();
    let kinetic = 0.5 * system.total_mass() * speed_sq * h;

    let mut potential = 0.0;
    let mut config = vec![Vec3::zeros(); shifts.len()];
    for j in 0..samples {
        configuration(&points, &shifts, j, &mut config);
        potential += potential_raw(&config, masses).map_err(|e| e.at_sample(j))?;
    }
    Ok(ActionBreakdown::new(kinetic, potential * h))
}

/// Gradient of the discrete action with respect to each loop sample, split
/// into kinetic and potential parts. Every vector lies in the tangent plane
/// of its sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionGradient {
    pub kinetic: Vec<Vec3>,
    pub potential: Vec<Vec3>,
    pub total: Vec<Vec3>,
}

impl ActionGradient {
    /// Largest absolute component of the total gradient.
    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.total)
    }
}

pub(crate) fn sup_norm(field: &[Vec3]) -> f64 {
    field.iter().map(|v| v.amax()).fold(0.0, f64::max)
}

pub fn action_gradient(lp: &DiscreteLoop, system: &BodySystem) -> Result<ActionGradient> {
    let shifts = system.sample_shifts(lp.len())?;
    let points = lp.vectors();
    let samples = points.len();
    let h = 1.0 / samples as f64;
    let masses = system.masses();
    let total_mass = system.total_mass();

    // the difference stencil is antisymmetric, so its adjoint is its negative:
    // dK/dQ_k = -M D(v)_k
    let velocities = velocities_of(&points);
    let mut kinetic: Vec<Vec3> = (0..samples as isize)
        .map(|k| first_difference(&velocities, k) * -total_mass)
        .collect();

    // body i sits on sample k at time k - s_i
    let mut potential = vec![Vec3::zeros(); samples];
    let mut config = vec![Vec3::zeros(); shifts.len()];
    let mut forces = vec![Vec3::zeros(); shifts.len()];
    for j in 0..samples {
        configuration(&points, &shifts, j, &mut config);
        gradient_raw(&config, masses, &mut forces).map_err(|e| e.at_sample(j))?;
        for (force, s) in forces.iter().zip(&shifts) {
            potential[(j + s) % samples] += force * h;
        }
    }

    for (k, q) in points.iter().enumerate() {
        let (gk, gp) = (kinetic[k], potential[k]);
        kinetic[k] = gk - q * q.dot(&gk);
        potential[k] = gp - q * q.dot(&gp);
    }
    let total = kinetic.iter().zip(&potential).map(|(a, b)| a + b).collect();
    Ok(ActionGradient {
        kinetic,
        potential,
        total,
    })
}

/// `|v|^2 - 1`, evaluated with compensated arithmetic so that the result is
/// accurate even when it is of the order of the unit roundoff.
fn norm_defect(v: &Vec3) -> f64 {
    let mut hi = -1.0;
    let mut lo = 0.0;
    for x in v.iter() {
        let p = x * x;
        let e = x.mul_add(*x, -p);
        let s = hi + p;
        let bp = s - hi;
        lo += (hi - (s - bp)) + (p - bp) + e;
        hi = s;
    }
    hi + lo
}

/// `v - v/|v|` for a vector within a few ulps of the sphere, accurate to
/// roundoff in the (tiny) result.
fn off_sphere_part(v: &Vec3) -> Vec3 {
    let defect = norm_defect(v);
    let norm = (1.0 + defect).sqrt();
    v * (defect / (norm * (norm + 1.0)))
}

/// `A(to) - A(from)` for two loops that are close to each other, computed
/// from the sample differences instead of subtracting two nearly equal
/// totals. Both loops are treated as lying exactly on the sphere.
///
/// The absolute error is proportional to the size of the change, which lets
/// a line search resolve decreases far below the roundoff of the action
/// itself.
pub fn action_difference(from: &DiscreteLoop, to: &DiscreteLoop, system: &BodySystem) -> Result<f64> {
    if from.len() != to.len() {
        return Err(Error::InvalidLoop("loops have different sample counts".into()));
    }
    let shifts = system.sample_shifts(from.len())?;
    let masses = system.masses();
    let samples = from.len();
    let h = 1.0 / samples as f64;

    let base: Vec<Vec3> = from.vectors().iter().map(|q| q - off_sphere_part(q)).collect();
    let delta: Vec<Vec3> = from
        .samples()
        .iter()
        .zip(to.samples())
        .map(|(a, b)| {
            let (a, b) = (a.vector(), b.vector());
            (b - a) - (off_sphere_part(b) - off_sphere_part(a))
        })
        .collect();

    let v = velocities_of(&base);
    let dv = velocities_of(&delta);
    let kinetic: f64 =
        v.iter().zip(&dv).map(|(v, dv)| dv.dot(&(v * 2.0 + dv))).sum::<f64>() * 0.5 * system.total_mass() * h;

    // cot = cos / sin with cos = a.b and sin = |a x b|; both differences are
    // expanded in the sample deltas.
    let mut potential = 0.0;
    for j in 0..samples {
        for (a, sa) in shifts.iter().enumerate() {
            for (b, sb) in shifts.iter().enumerate().skip(a + 1) {
                let (ia, ib) = ((j + sa) % samples, (j + sb) % samples);
                let (qa, qb) = (base[ia], base[ib]);
                let (da, db) = (delta[ia], delta[ib]);
                pair_cot(&qa, &qb, a, b).map_err(|e| e.at_sample(j))?;
                pair_cot(&(qa + da), &(qb + db), a, b).map_err(|e| e.at_sample(j))?;

                let cos = qa.dot(&qb);
                let dcos = da.dot(&qb) + qa.dot(&db) + da.dot(&db);
                let w = qa.cross(&qb);
                let dw = da.cross(&qb) + qa.cross(&db) + da.cross(&db);
                let sin = w.norm();
                let sin_new = (w + dw).norm();
                let dsin = dw.dot(&(w * 2.0 + dw)) / (sin + sin_new);
                let dcot = (dcos * sin - cos * dsin) / (sin * sin_new);
                potential += masses[a] * masses[b] * dcot;
            }
        }
    }
    Ok(kinetic + potential * h)
}

/// `(3/2)(12 pi)^{2/3} - 3`: no periodic path with a binary collision has
/// smaller action (unit masses, three bodies).
pub fn collision_bound() -> f64 {
    let c = (12.0 * PI).cbrt();
    1.5 * c * c - 3.0
}

/// `| sum_{i<j} |v_i - v_j|^2 + |sum_i v_i|^2 - n sum_i |v_i|^2 |`, which
/// vanishes identically.
pub fn velocity_identity_residual(velocities: &[Vec3]) -> f64 {
    let n = velocities.len();
    let mut pairs = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pairs += (velocities[i] - velocities[j]).norm_squared();
        }
    }
    let sum: Vec3 = velocities.iter().sum();
    let lhs = pairs + sum.norm_squared();
    let rhs = n as f64 * velocities.iter().map(|v| v.norm_squared()).sum::<f64>();
    (lhs - rhs).abs()
}

/// Action of a choreography computed through the explicit per-body paths.
pub fn action_via_paths(lp: &DiscreteLoop, system: &BodySystem) -> Result<ActionBreakdown> {
    action_of_paths(&build_choreography(lp, system)?, system.masses())
}
