//! Sampled periodic loops, the choreography construction `q_i(t) = Q(t + k_i)`,
//! and the reflection/time-reversal symmetries used to pin down figure-eight
//! shaped loops for three bodies.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, UnitPoint, Vec3};

/// Smallest number of samples a loop may carry (the difference stencils
/// reach two samples to each side).
pub const MIN_SAMPLES: usize = 8;

/// `N` uniform samples `Q(j/N)`, `j = 0..N`, of a closed curve on S^2 with
/// period 1. Indexing is cyclic.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLoop {
    samples: Vec<UnitPoint>,
}

impl DiscreteLoop {
    pub fn new(samples: Vec<UnitPoint>) -> Result<Self> {
        let n = samples.len();
        if n < MIN_SAMPLES {
            return Err(Error::InvalidLoop(format!(
                "{n} samples, at least {MIN_SAMPLES} required"
            )));
        }
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidLoop(format!("sample count {n} is odd")));
        }
        Ok(DiscreteLoop { samples })
    }

    /// Samples `f(j/N)` and projects each value radially onto the sphere.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> Vec3) -> Result<Self> {
        let samples = (0..n)
            .map(|j| UnitPoint::normalize(f(j as f64 / n as f64)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    pub fn constant(point: UnitPoint, n: usize) -> Result<Self> {
        Self::new(vec![point; n])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[UnitPoint] {
        &self.samples
    }

    /// Cyclic access: `sample(j + N) == sample(j)`, negative indices allowed.
    pub fn sample(&self, j: isize) -> UnitPoint {
        self.samples[j.rem_euclid(self.len() as isize) as usize]
    }

    pub(crate) fn vectors(&self) -> Vec<Vec3> {
        self.samples.iter().map(|p| *p.vector()).collect()
    }

    pub(crate) fn from_vectors_unchecked(v: Vec<Vec3>) -> Self {
        DiscreteLoop {
            samples: v.into_iter().map(UnitPoint::from_vector_unchecked).collect(),
        }
    }

    /// The loop `t -> R Q(t)` for an orthogonal matrix `R`.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|p| UnitPoint::normalize(rotation * p.vector()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    /// The loop `t -> Q(t + k/N)`.
    pub fn shifted(&self, k: isize) -> Self {
        let samples = (0..self.len() as isize).map(|j| self.sample(j + k)).collect();
        DiscreteLoop { samples }
    }

    /// Largest componentwise difference to another loop of the same length.
    pub fn max_abs_diff(&self, other: &DiscreteLoop) -> f64 {
        assert_eq!(self.len(), other.len(), "loops of different length");
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.vector() - b.vector()).amax())
            .fold(0.0, f64::max)
    }
}

/// Body count, masses and phase offsets `0 = k_1 < ... < k_n < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BodySystem {
    masses: Vec<f64>,
    offsets: Vec<f64>,
}

impl BodySystem {
    /// A choreography: offsets `k_i = (i - 1)/n`.
    pub fn choreography(masses: Vec<f64>) -> Result<Self> {
        let n = masses.len();
        let offsets = (0..n).map(|i| i as f64 / n as f64).collect();
        Self::with_offsets(masses, offsets)
    }

    pub fn equal_masses(n: usize) -> Result<Self> {
        Self::choreography(vec![1.0; n])
    }

    pub fn with_offsets(masses: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidSystem("no bodies".into()));
        }
        if masses.len() != offsets.len() {
            return Err(Error::InvalidSystem(format!(
                "{} masses but {} offsets",
                masses.len(),
                offsets.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidSystem(format!("mass {m} is not positive")));
        }
        if offsets[0] != 0.0 {
            return Err(Error::InvalidSystem("first offset must be 0".into()));
        }
        if offsets.windows(2).any(|w| !(w[0] < w[1])) || offsets.iter().any(|k| !(*k < 1.0)) {
            return Err(Error::InvalidSystem(
                "offsets must increase strictly within [0, 1)".into(),
            ));
        }
        Ok(BodySystem { masses, offsets })
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// True for the uniform phases `(i - 1)/n`.
    pub fn is_uniform(&self) -> bool {
        let n = self.n() as f64;
        self.offsets.iter().enumerate().all(|(i, k)| *k == i as f64 / n)
    }

    /// Phase offsets expressed as sample shifts for an `N`-sample loop.
    pub fn sample_shifts(&self, samples: usize) -> Result<Vec<usize>> {
        let n = self.n();
        if self.is_uniform() {
            if !samples.is_multiple_of(n) {
                return Err(Error::Indivisible {
                    what: "sample count",
                    value: samples,
                    divisor: n,
                });
            }
            return Ok((0..n).map(|i| i * samples / n).collect());
        }
        self.offsets
            .iter()
            .map(|k| {
                let s = k * samples as f64;
                if (s - s.round()).abs() > 1e-9 {
                    Err(Error::InvalidSystem(format!(
                        "offset {k} is not a multiple of 1/{samples}"
                    )))
                } else {
                    Ok(s.round() as usize)
                }
            })
            .collect()
    }
}

/// The per-body trajectories `q_i(j/N) = Q((j + s_i)/N)`.
pub fn build_choreography(lp: &DiscreteLoop, system: &BodySystem) -> Result<Vec<DiscreteLoop>> {
    let shifts = system.sample_shifts(lp.len())?;
    Ok(shifts.iter().map(|&s| lp.shifted(s as isize)).collect())
}

/// Diagonal sign matrices generated by `B = diag(1, -1, 1)` and
/// `C = diag(-1, -1, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisSigns {
    Identity,
    B,
    C,
    /// `BC = diag(-1, 1, 1)`.
    BC,
}

impl AxisSigns {
    pub fn signs(self) -> [f64; 3] {
        match self {
            AxisSigns::Identity => [1.0, 1.0, 1.0],
            AxisSigns::B => [1.0, -1.0, 1.0],
            AxisSigns::C => [-1.0, -1.0, 1.0],
            AxisSigns::BC => [-1.0, 1.0, 1.0],
        }
    }

    #[inline]
    pub fn apply(self, v: &Vec3) -> Vec3 {
        let s = self.signs();
        Vec3::new(s[0] * v.x, s[1] * v.y, s[2] * v.z)
    }

    pub fn matrix(self) -> Matrix3<f64> {
        let s = self.signs();
        Matrix3::from_diagonal(&Vec3::new(s[0], s[1], s[2]))
    }
}

/// A loop-space map `Q -> (t -> M Q(+-t + shift/N))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymmetryElement {
    pub shift: usize,
    pub matrix: AxisSigns,
    pub time_reversal: bool,
}

impl SymmetryElement {
    pub fn identity() -> Self {
        SymmetryElement {
            shift: 0,
            matrix: AxisSigns::Identity,
            time_reversal: false,
        }
    }

    /// `Q(t) -> B Q(t + 1/2)`.
    pub fn half_period_reflection(samples: usize) -> Self {
        SymmetryElement {
            shift: samples / 2,
            matrix: AxisSigns::B,
            time_reversal: false,
        }
    }

    /// `Q(t) -> C Q(-t)`.
    pub fn time_reversal_rotation() -> Self {
        SymmetryElement {
            shift: 0,
            matrix: AxisSigns::C,
            time_reversal: true,
        }
    }

    /// The four elements of the group generated by the two maps above.
    pub fn group(samples: usize) -> [SymmetryElement; 4] {
        [
            Self::identity(),
            Self::half_period_reflection(samples),
            Self::time_reversal_rotation(),
            // B C Q(-t - 1/2)
            SymmetryElement {
                shift: samples / 2,
                matrix: AxisSigns::BC,
                time_reversal: true,
            },
        ]
    }

    #[inline]
    fn source_index(&self, j: usize, samples: usize) -> usize {
        let j = if self.time_reversal { (samples - j) % samples } else { j };
        (j + self.shift) % samples
    }

    /// Acts on a per-sample vector field (positions or gradients alike).
    pub fn apply_field(&self, field: &[Vec3]) -> Vec<Vec3> {
        let n = field.len();
        (0..n)
            .map(|j| self.matrix.apply(&field[self.source_index(j, n)]))
            .collect()
    }

    pub fn apply(&self, lp: &DiscreteLoop) -> DiscreteLoop {
        DiscreteLoop::from_vectors_unchecked(self.apply_field(&lp.vectors()))
    }
}

fn require_divisible(samples: usize, divisor: usize) -> Result<()> {
    if !samples.is_multiple_of(divisor) {
        return Err(Error::Indivisible {
            what: "sample count",
            value: samples,
            divisor,
        });
    }
    Ok(())
}

/// `t -> B Q(t + 1/2)`.
pub fn apply_e2(lp: &DiscreteLoop) -> DiscreteLoop {
    SymmetryElement::half_period_reflection(lp.len()).apply(lp)
}

/// `t -> C Q(-t)`.
pub fn apply_e3(lp: &DiscreteLoop) -> DiscreteLoop {
    SymmetryElement::time_reversal_rotation().apply(lp)
}

/// Average of a vector field over the four group images, without any
/// renormalization. This is the linear projection onto the invariant fields.
pub fn symmetrize_field(field: &[Vec3]) -> Vec<Vec3> {
    let n = field.len();
    let images: Vec<Vec<Vec3>> = SymmetryElement::group(n).iter().map(|g| g.apply_field(field)).collect();
    (0..n)
        .map(|j| ((images[0][j] + images[1][j]) + (images[2][j] + images[3][j])) * 0.25)
        .collect()
}

/// Projection onto the loops fixed by both symmetries: average the four
/// group images in ambient space, then push each sample back onto the sphere.
pub fn symmetrize(lp: &DiscreteLoop) -> Result<DiscreteLoop> {
    require_divisible(lp.len(), 4)?;
    let averaged = symmetrize_field(&lp.vectors());
    let samples = averaged
        .into_iter()
        .enumerate()
        .map(|(j, v)| UnitPoint::normalize(v).map_err(|e| e.at_sample(j)))
        .collect::<Result<Vec<_>>>()?;
    DiscreteLoop::new(samples)
}

/// Largest deviation of `lp` from its image under `element`.
pub fn fixed_point_residual(lp: &DiscreteLoop, element: &SymmetryElement) -> f64 {
    element.apply(lp).max_abs_diff(lp)
}

/// Fixed-point errors of the half-period reflection and of the time reversal.
pub fn symmetry_residuals(lp: &DiscreteLoop) -> (f64, f64) {
    (
        fixed_point_residual(lp, &SymmetryElement::half_period_reflection(lp.len())),
        fixed_point_residual(lp, &SymmetryElement::time_reversal_rotation()),
    )
}

/// `sin(2 pi j / n)` with exact zeros and exact odd/half-period symmetry
/// when `n` is a multiple of 4.
fn sin_turns(j: usize, n: usize) -> f64 {
    let j = j % n;
    if j == 0 || 2 * j == n {
        return 0.0;
    }
    if 2 * j > n {
        return -sin_turns(n - j, n);
    }
    let j = if 4 * j > n && n.is_multiple_of(2) { n / 2 - j } else { j };
    (2.0 * std::f64::consts::PI * j as f64 / n as f64).sin()
}

pub const TEST_LOOP_X_AMPLITUDE: f64 = 0.15;
pub const TEST_LOOP_Y_AMPLITUDE: f64 = 0.2275;

/// Closed-form comparison loop
/// `x = 0.15 sin(4 pi t), y = 0.2275 sin(2 pi t), z = sqrt(1 - x^2 - y^2)`.
pub fn test_loop(samples: usize) -> Result<DiscreteLoop> {
    require_divisible(samples, 12)?;
    let points = (0..samples)
        .map(|j| {
            let x = TEST_LOOP_X_AMPLITUDE * sin_turns(2 * j, samples);
            let y = TEST_LOOP_Y_AMPLITUDE * sin_turns(j, samples);
            let z = (1.0 - x * x - y * y).sqrt();
            UnitPoint::from_vector_unchecked(Vec3::new(x, y, z))
        })
        .collect();
    DiscreteLoop::new(points)
}

/// Smallest geodesic distance between two bodies of the induced
/// choreography over all samples.
pub fn min_pair_separation(lp: &DiscreteLoop, system: &BodySystem) -> Result<f64> {
    let shifts = system.sample_shifts(lp.len())?;
    let mut min = f64::INFINITY;
    for j in 0..lp.len() as isize {
        for (a, sa) in shifts.iter().enumerate() {
            for sb in &shifts[a + 1..] {
                let d = geodesic_distance(&lp.sample(j + *sa as isize), &lp.sample(j + *sb as isize));
                min = min.min(d);
            }
        }
    }
    Ok(min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn wobbly_loop(n: usize) -> DiscreteLoop {
        DiscreteLoop::from_fn(n, |t| {
            let a = 2.0 * PI * t;
            Vec3::new(
                0.2 * (2.0 * a).sin() + 0.03 * a.cos(),
                0.25 * a.sin() + 0.02 * (3.0 * a).cos(),
                1.0,
            )
        })
        .unwrap()
    }

    #[test]
    fn loop_construction_rules() {
        let p = UnitPoint::NORTH_POLE;
        assert!(DiscreteLoop::new(vec![p; 6]).is_err());
        assert!(DiscreteLoop::new(vec![p; 9]).is_err());
        let l = DiscreteLoop::new(vec![p; 8]).unwrap();
        assert_eq!(l.sample(-1), l.sample(7));
        assert_eq!(l.sample(8), l.sample(0));
    }

    #[test]
    fn body_system_validation() {
        assert!(BodySystem::equal_masses(3).unwrap().is_uniform());
        assert!(BodySystem::choreography(vec![1.0, -1.0]).is_err());
        assert!(BodySystem::with_offsets(vec![1.0; 2], vec![0.1, 0.5]).is_err());
        assert!(BodySystem::with_offsets(vec![1.0; 2], vec![0.0, 0.0]).is_err());
        assert!(BodySystem::with_offsets(vec![1.0; 2], vec![0.0, 1.0]).is_err());
        let s = BodySystem::with_offsets(vec![1.0; 2], vec![0.0, 0.25]).unwrap();
        assert_eq!(s.sample_shifts(16).unwrap(), vec![0, 4]);
        assert!(s.sample_shifts(10).is_err());
    }

    #[test]
    fn choreography_shifts() {
        let l = wobbly_loop(12);
        let one = build_choreography(&l, &BodySystem::equal_masses(1).unwrap()).unwrap();
        assert_eq!(one[0], l);
        let three = build_choreography(&l, &BodySystem::equal_masses(3).unwrap()).unwrap();
        assert_eq!(three[1].sample(0), l.sample(4));
        // q_i(t) = q_{i-1}(t + 1/n)
        for j in 0..12 {
            assert_eq!(three[1].sample(j), three[0].sample(j + 4));
            assert_eq!(three[2].sample(j), three[1].sample(j + 4));
            assert_eq!(three[0].sample(j), three[2].sample(j + 4));
        }
        assert!(matches!(
            build_choreography(&wobbly_loop(16), &BodySystem::equal_masses(3).unwrap()),
            Err(Error::Indivisible { .. })
        ));
    }

    #[test]
    fn test_loop_closed_form() {
        let l = test_loop(12).unwrap();
        assert_eq!(l.sample(0), UnitPoint::NORTH_POLE);
        assert_eq!(l.sample(6), UnitPoint::NORTH_POLE);
        let l = test_loop(48).unwrap();
        let q = l.sample(6); // t = 1/8
        assert_relative_eq!(q.x(), 0.15, epsilon = 1e-16);
        assert_relative_eq!(q.y(), 0.2275 * (PI / 4.0).sin(), epsilon = 1e-16);
        for p in test_loop(516).unwrap().samples() {
            assert!((p.vector().norm() - 1.0).abs() < 1e-14);
        }
        assert!(test_loop(512).is_err());
    }

    #[test]
    fn test_loop_is_symmetric() {
        let l = test_loop(96).unwrap();
        assert_eq!(apply_e2(&l), l);
        assert_eq!(apply_e3(&l), l);
        assert!(symmetrize(&l).unwrap().max_abs_diff(&l) < 1e-12);
    }

    #[test]
    fn reflections_are_involutions() {
        let l = wobbly_loop(40);
        assert_eq!(apply_e2(&apply_e2(&l)), l);
        assert_eq!(apply_e3(&apply_e3(&l)), l);
        let pole = DiscreteLoop::constant(UnitPoint::NORTH_POLE, 16).unwrap();
        assert_eq!(apply_e2(&pole), pole);
        assert_eq!(apply_e3(&pole), pole);
    }

    #[test]
    fn group_closure() {
        let l = wobbly_loop(24);
        let g = SymmetryElement::group(24);
        assert_eq!(g[1].apply(&g[2].apply(&l)), g[3].apply(&l));
        assert_eq!(g[2].apply(&g[1].apply(&l)), g[3].apply(&l));
    }

    #[test]
    fn symmetrize_is_idempotent_and_pins_the_poles() {
        let l = wobbly_loop(48);
        let s = symmetrize(&l).unwrap();
        let (e2, e3) = symmetry_residuals(&s);
        assert!(e2 < 1e-12 && e3 < 1e-12, "{e2} {e3}");
        assert!(symmetrize(&s).unwrap().max_abs_diff(&s) < 1e-12);
        for j in [0, 24] {
            assert!(s.sample(j).x().abs() < 1e-10 && s.sample(j).y().abs() < 1e-10);
        }
        assert!(symmetrize(&wobbly_loop(18)).is_err());
    }

    #[test]
    fn symmetrize_rejects_vanishing_average() {
        // the group average of an equatorial loop x = cos, y = sin cancels
        let l = DiscreteLoop::from_fn(16, |t| Vec3::new((2.0 * PI * t).cos(), (2.0 * PI * t).sin(), 0.0)).unwrap();
        assert!(matches!(symmetrize(&l), Err(Error::AtSample { .. })));
    }

    #[test]
    fn separation_examples() {
        let sys = BodySystem::equal_masses(3).unwrap();
        assert!(min_pair_separation(&test_loop(120).unwrap(), &sys).unwrap() > 0.0);
        let pole = DiscreteLoop::constant(UnitPoint::NORTH_POLE, 12).unwrap();
        assert_eq!(min_pair_separation(&pole, &sys).unwrap(), 0.0);
        let mut pts = wobbly_loop(12).samples().to_vec();
        pts[4] = pts[0];
        let l = DiscreteLoop::new(pts).unwrap();
        assert_eq!(min_pair_separation(&l, &sys).unwrap(), 0.0);
    }

    #[test]
    fn test_loop_bodies_never_meet() {
        let l = test_loop(600).unwrap();
        let bodies = build_choreography(&l, &BodySystem::equal_masses(3).unwrap()).unwrap();
        for j in 0..600 {
            for a in 0..3 {
                for b in a + 1..3 {
                    assert_ne!(bodies[a].sample(j), bodies[b].sample(j));
                }
            }
        }
    }
}
