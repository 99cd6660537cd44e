//! Pointwise geometry on the unit sphere and the cotangent force function.
//!
//! Distances are computed as `atan2(|a x b|, a . b)`, which is the clamped
//! `arccos(a . b)` evaluated without losing accuracy near 0 and pi. The
//! force function of a configuration is `U = sum_{i<j} m_i m_j cot d(q_i, q_j)`;
//! note that `cot d = (a . b) / |a x b|` is homogeneous of degree zero in
//! both arguments, so it tolerates positions that sit a few ulps off the
//! sphere.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Pairs closer than this (or closer than this to antipodal) are singular.
pub const COLLISION_EPS: f64 = 1e-8;

/// Allowed deviation of `|v|^2` from 1 when a point is accepted as-is.
pub const UNIT_TOL: f64 = 1e-12;

/// Ambient norms below this cannot be projected back onto the sphere.
pub const DEGENERATE_NORM: f64 = 1e-6;

/// A point on the unit sphere S^2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitPoint(Vec3);

impl UnitPoint {
    pub const NORTH_POLE: UnitPoint = UnitPoint(Vec3::new(0.0, 0.0, 1.0));

    /// Accepts `(x, y, z)` if it is unit length within [`UNIT_TOL`] and
    /// rescales it onto the sphere; rejects it otherwise. Vectors already
    /// unit up to rounding are kept bit for bit.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vector(Vec3::new(x, y, z))
    }

    pub fn from_vector(v: Vec3) -> Result<Self> {
        let defect = v.norm_squared() - 1.0;
        if !(defect.abs() <= UNIT_TOL) {
            return Err(Error::NotUnit(defect));
        }
        if defect.abs() <= 8.0 * f64::EPSILON {
            return Ok(UnitPoint(v));
        }
        Ok(UnitPoint(v / v.norm()))
    }

    /// Radial projection of an arbitrary ambient vector onto the sphere.
    pub fn normalize(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !(norm >= DEGENERATE_NORM) || !norm.is_finite() {
            return Err(Error::Degenerate(norm));
        }
        Ok(UnitPoint(v / norm))
    }

    pub(crate) fn from_vector_unchecked(v: Vec3) -> Self {
        UnitPoint(v)
    }

    #[inline]
    pub fn vector(&self) -> &Vec3 {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn dot(&self, other: &UnitPoint) -> f64 {
        self.0.dot(&other.0)
    }

    /// Component of `v` orthogonal to this point.
    #[inline]
    pub fn project(&self, v: &Vec3) -> Vec3 {
        v - self.0 * self.0.dot(v)
    }
}

/// A vector in the tangent plane at `base`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: UnitPoint,
    pub v: Vec3,
}

impl TangentVector {
    /// Checks `base . v = 0` to 1e-10, relative to `max(1, |v|)`.
    pub fn new(base: UnitPoint, v: Vec3) -> Result<Self> {
        let dot = base.vector().dot(&v);
        if !(dot.abs() <= 1e-10 * v.norm().max(1.0)) {
            return Err(Error::NotTangent(dot));
        }
        Ok(TangentVector { base, v })
    }

    /// Orthogonal projection of `v` onto the tangent plane at `base`.
    pub fn projected(base: UnitPoint, v: Vec3) -> Self {
        TangentVector {
            v: base.project(&v),
            base,
        }
    }
}

/// Geodesic and chordal separation of two points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSeparation {
    pub geodesic: f64,
    pub chordal: f64,
}

impl PairSeparation {
    pub fn between(a: &UnitPoint, b: &UnitPoint) -> Self {
        PairSeparation {
            geodesic: geodesic_distance(a, b),
            chordal: (a.vector() - b.vector()).norm(),
        }
    }
}

#[inline]
fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Great-circle distance in radians, in `[0, pi]`.
pub fn geodesic_distance(a: &UnitPoint, b: &UnitPoint) -> f64 {
    angle_between(a.vector(), b.vector())
}

/// Cotangent of the geodesic distance between bodies `i` and `j`, with the
/// singular pairs rejected.
#[inline]
pub(crate) fn pair_cot(a: &Vec3, b: &Vec3, i: usize, j: usize) -> Result<f64> {
    let sin = a.cross(b).norm();
    let cos = a.dot(b);
    let distance = sin.atan2(cos);
    check_pair(distance, i, j)?;
    Ok(cos / sin)
}

#[inline]
fn check_pair(distance: f64, i: usize, j: usize) -> Result<()> {
    if !(distance >= COLLISION_EPS) {
        return Err(Error::Collision { i, j, distance });
    }
    if distance > PI - COLLISION_EPS {
        return Err(Error::Antipodal { i, j, distance });
    }
    Ok(())
}

/// `cot d(a, b)` for a non-colliding, non-antipodal pair.
pub fn cot_pair(a: &UnitPoint, b: &UnitPoint) -> Result<f64> {
    pair_cot(a.vector(), b.vector(), 0, 1)
}

/// The cotangent of the geodesic distance written in terms of the chordal
/// distance `r`: `(1 - r^2/2) / (r sqrt(1 - r^2/4))`.
pub fn cot_from_chordal(r: f64) -> f64 {
    (1.0 - 0.5 * r * r) / (r * (1.0 - 0.25 * r * r).sqrt())
}

/// Bounds `(1/r - 1, 1/r)` that bracket `cot d` for chordal distance `r`.
pub fn cot_bounds(r: f64) -> Result<(f64, f64)> {
    if !(r > 0.0 && r < 2.0) {
        return Err(Error::ChordalDomain(r));
    }
    Ok((1.0 / r - 1.0, 1.0 / r))
}

fn check_masses(positions: usize, masses: &[f64]) -> Result<()> {
    if positions != masses.len() {
        return Err(Error::InvalidSystem(format!(
            "{positions} positions but {} masses",
            masses.len()
        )));
    }
    Ok(())
}

/// Force function `U = sum_{i<j} m_i m_j cot d(q_i, q_j)`.
pub fn potential(positions: &[UnitPoint], masses: &[f64]) -> Result<f64> {
    check_masses(positions.len(), masses)?;
    let mut sum = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            sum += masses[i] * masses[j] * pair_cot(positions[i].vector(), positions[j].vector(), i, j)?;
        }
    }
    Ok(sum)
}

/// Tangent gradient of the force function with respect to each position:
/// `sum_{j != i} m_i m_j (q_j - (q_i . q_j) q_i) / (1 - (q_i . q_j)^2)^{3/2}`.
pub fn potential_gradient(positions: &[UnitPoint], masses: &[f64]) -> Result<Vec<TangentVector>> {
    check_masses(positions.len(), masses)?;
    let raw: Vec<Vec3> = positions.iter().map(|p| *p.vector()).collect();
    let mut out = vec![Vec3::zeros(); raw.len()];
    gradient_raw(&raw, masses, &mut out)?;
    Ok(positions
        .iter()
        .zip(out)
        .map(|(p, g)| TangentVector::projected(*p, g))
        .collect())
}

/// Potential of ambient positions that lie on (or within roundoff of) the
/// sphere. Pairs are summed in ascending `(i, j)` order.
pub(crate) fn potential_raw(positions: &[Vec3], masses: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            sum += masses[i] * masses[j] * pair_cot(&positions[i], &positions[j], i, j)?;
        }
    }
    Ok(sum)
}

/// Tangent force field evaluated at the radial projections of `positions`.
/// Writes `dU/dq_i` into `out[i]`.
pub(crate) fn gradient_raw(positions: &[Vec3], masses: &[f64], out: &mut [Vec3]) -> Result<()> {
    let n = positions.len();
    for g in out.iter_mut() {
        *g = Vec3::zeros();
    }
    for i in 0..n {
        let qi = positions[i].normalize();
        for j in i + 1..n {
            let qj = positions[j].normalize();
            let cross = qi.cross(&qj);
            let sin = cross.norm();
            let cos = qi.dot(&qj);
            check_pair(sin.atan2(cos), i, j)?;
            let scale = masses[i] * masses[j] / (sin * sin * sin);
            out[i] += (qj - qi * cos) * scale;
            out[j] += (qi - qj * cos) * scale;
        }
    }
    for (g, q) in out.iter_mut().zip(positions) {
        let q = q.normalize();
        *g -= q * q.dot(g);
    }
    Ok(())
}
