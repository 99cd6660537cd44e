//! Initial-value integration of the equations of motion on the sphere,
//!
//! ```text
//! m_i q_i'' = dU/dq_i - m_i |q_i'|^2 q_i,
//! ```
//!
//! plus the checks that tell a genuine periodic solution from a merely
//! low-action loop.

use crate::action::{accelerations_of, velocities_of};
use crate::choreography::{build_choreography, BodySystem, DiscreteLoop};
use crate::error::{Error, Result};
use crate::geometry::{gradient_raw, potential_raw, UnitPoint, Vec3};

/// Positions on the sphere and tangent velocities of all bodies.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub positions: Vec<UnitPoint>,
    pub velocities: Vec<Vec3>,
}

impl PhaseState {
    pub fn new(positions: Vec<UnitPoint>, velocities: Vec<Vec3>) -> Result<Self> {
        if positions.len() != velocities.len() {
            return Err(Error::InvalidSystem(format!(
                "{} positions but {} velocities",
                positions.len(),
                velocities.len()
            )));
        }
        for (q, v) in positions.iter().zip(&velocities) {
            let dot = q.vector().dot(v);
            if !(dot.abs() <= 1e-10 * v.norm().max(1.0)) {
                return Err(Error::NotTangent(dot));
            }
        }
        Ok(PhaseState { positions, velocities })
    }

    /// Bodies at `t = 0` of the choreography generated by `lp`, with
    /// velocities from the loop's difference stencil.
    pub fn from_loop(lp: &DiscreteLoop, system: &BodySystem) -> Result<Self> {
        let shifts = system.sample_shifts(lp.len())?;
        let velocities = velocities_of(&lp.vectors());
        let positions: Vec<UnitPoint> = shifts.iter().map(|&s| lp.samples()[s]).collect();
        let velocities = shifts
            .iter()
            .zip(&positions)
            .map(|(&s, q)| q.project(&velocities[s]))
            .collect();
        Self::new(positions, velocities)
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    /// Largest componentwise difference in positions and velocities.
    pub fn sup_distance(&self, other: &PhaseState) -> f64 {
        let pos = self
            .positions
            .iter()
            .zip(&other.positions)
            .map(|(a, b)| (a.vector() - b.vector()).amax());
        let vel = self
            .velocities
            .iter()
            .zip(&other.velocities)
            .map(|(a, b)| (a - b).amax());
        pos.chain(vel).fold(0.0, f64::max)
    }

    fn raw_positions(&self) -> Vec<Vec3> {
        self.positions.iter().map(|p| *p.vector()).collect()
    }
}

fn check_masses(n: usize, masses: &[f64]) -> Result<()> {
    if n != masses.len() {
        return Err(Error::InvalidSystem(format!("{n} bodies but {} masses", masses.len())));
    }
    Ok(())
}

/// Right-hand side in ambient coordinates. Off-sphere stage positions are
/// handled by evaluating the force at their radial projection.
fn vector_field(q: &[Vec3], v: &[Vec3], masses: &[f64], out: &mut [Vec3]) -> Result<()> {
    gradient_raw(q, masses, out)?;
    for i in 0..q.len() {
        out[i] = out[i] / masses[i] - q[i] * v[i].norm_squared();
    }
    Ok(())
}

/// `q_i'' = (1/m_i) dU/dq_i - |q_i'|^2 q_i` for every body.
pub fn accelerations(state: &PhaseState, masses: &[f64]) -> Result<Vec<Vec3>> {
    check_masses(state.n(), masses)?;
    let mut out = vec![Vec3::zeros(); state.n()];
    vector_field(&state.raw_positions(), &state.velocities, masses, &mut out)?;
    Ok(out)
}

/// `E = 1/2 sum m_i |v_i|^2 - U`, conserved along solutions.
pub fn energy(state: &PhaseState, masses: &[f64]) -> Result<f64> {
    check_masses(state.n(), masses)?;
    let kinetic: f64 = state
        .velocities
        .iter()
        .zip(masses)
        .map(|(v, m)| 0.5 * m * v.norm_squared())
        .sum();
    Ok(kinetic - potential_raw(&state.raw_positions(), masses)?)
}

/// One classical Runge-Kutta step followed by projection of every position
/// onto the sphere and every velocity onto the new tangent plane.
pub fn step_rk4(state: &PhaseState, masses: &[f64], h: f64) -> Result<PhaseState> {
    check_masses(state.n(), masses)?;
    if !(h > 0.0) {
        return Err(Error::InvalidOption(format!("step {h} must be positive")));
    }
    let n = state.n();
    let q0 = state.raw_positions();
    let v0 = &state.velocities;

    let mut kq = [
        vec![Vec3::zeros(); n],
        vec![Vec3::zeros(); n],
        vec![Vec3::zeros(); n],
        vec![Vec3::zeros(); n],
    ];
    let mut kv = kq.clone();
    let mut q = q0.clone();
    let mut v = v0.clone();
    let weights = [0.0, 0.5, 0.5, 1.0];
    for stage in 0..4 {
        if stage > 0 {
            let w = weights[stage] * h;
            for i in 0..n {
                q[i] = q0[i] + kq[stage - 1][i] * w;
                v[i] = v0[i] + kv[stage - 1][i] * w;
            }
        }
        kq[stage].copy_from_slice(&v);
        vector_field(&q, &v, masses, &mut kv[stage])?;
    }

    let mut positions = Vec::with_capacity(n);
    let mut velocities = Vec::with_capacity(n);
    for i in 0..n {
        let dq = (kq[0][i] + kq[1][i] * 2.0 + kq[2][i] * 2.0 + kq[3][i]) * (h / 6.0);
        let dv = (kv[0][i] + kv[1][i] * 2.0 + kv[2][i] * 2.0 + kv[3][i]) * (h / 6.0);
        let p = UnitPoint::normalize(q0[i] + dq)?;
        velocities.push(p.project(&(v0[i] + dv)));
        positions.push(p);
    }
    Ok(PhaseState { positions, velocities })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub step: f64,
    /// `max_t |E(t) - E(0)|`.
    pub energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> &PhaseState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn first(&self) -> &PhaseState {
        &self.states[0]
    }

    pub fn recompute_energy_drift(&self, masses: &[f64]) -> Result<f64> {
        let e0 = energy(self.first(), masses)?;
        self.states
            .iter()
            .map(|s| energy(s, masses).map(|e| (e - e0).abs()))
            .try_fold(0.0_f64, |acc, d| d.map(|d| acc.max(d)))
    }
}

/// Number of steps of size `h` that make up `period`, if `h` divides it.
pub fn step_count(period: f64, h: f64) -> Result<usize> {
    if !(period > 0.0 && h > 0.0 && period.is_finite()) {
        return Err(Error::InvalidOption(format!(
            "need T > 0 and h > 0, got T = {period}, h = {h}"
        )));
    }
    let steps = (period / h).round();
    if steps < 1.0 || (steps * h - period).abs() > 1e-9 * period {
        return Err(Error::InvalidOption(format!("step {h} does not divide T = {period}")));
    }
    Ok(steps as usize)
}

/// Fixed-step projected RK4 from `state0` over `[0, period]`.
pub fn integrate(state0: &PhaseState, masses: &[f64], period: f64, h: f64) -> Result<Trajectory> {
    check_masses(state0.n(), masses)?;
    let steps = step_count(period, h)?;
    let e0 = energy(state0, masses).map_err(|e| e.at_time(0.0))?;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(state0.clone());
    let mut drift: f64 = 0.0;
    for k in 1..=steps {
        let t = k as f64 * h;
        let next = step_rk4(&states[k - 1], masses, h).map_err(|e| e.at_time(t))?;
        drift = drift.max((energy(&next, masses).map_err(|e| e.at_time(t))? - e0).abs());
        times.push(t);
        states.push(next);
    }
    Ok(Trajectory {
        times,
        states,
        step: h,
        energy_drift: drift,
    })
}

/// Sup over samples and bodies of `|m_i q_i'' - dU/dq_i + m_i |q_i'|^2 q_i|`
/// for general per-body paths, with derivatives from fourth-order cyclic
/// differences.
pub fn el_residual_paths(paths: &[DiscreteLoop], masses: &[f64]) -> Result<f64> {
    check_masses(paths.len(), masses)?;
    let samples = paths.first().map_or(0, |p| p.len());
    if paths.iter().any(|p| p.len() != samples) {
        return Err(Error::InvalidLoop("paths have different sample counts".into()));
    }
    let points: Vec<Vec<Vec3>> = paths.iter().map(|p| p.vectors()).collect();
    let vel: Vec<Vec<Vec3>> = points.iter().map(|p| velocities_of(p)).collect();
    let acc: Vec<Vec<Vec3>> = points.iter().map(|p| accelerations_of(p)).collect();
    let mut config = vec![Vec3::zeros(); paths.len()];
    let mut force = vec![Vec3::zeros(); paths.len()];
    let mut worst: f64 = 0.0;
    for j in 0..samples {
        for (slot, p) in config.iter_mut().zip(&points) {
            *slot = p[j];
        }
        gradient_raw(&config, masses, &mut force).map_err(|e| e.at_sample(j))?;
        for i in 0..paths.len() {
            let r = acc[i][j] * masses[i] - force[i] + config[i] * (masses[i] * vel[i][j].norm_squared());
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

/// Euler-Lagrange residual of the choreography generated by `lp`.
pub fn el_residual(lp: &DiscreteLoop, system: &BodySystem) -> Result<f64> {
    el_residual_paths(&build_choreography(lp, system)?, system.masses())
}

/// Integrates the choreography's `t = 0` state over one period and returns
/// how far the final state lands from the initial one.
pub fn closure_error(lp: &DiscreteLoop, system: &BodySystem, h: f64) -> Result<f64> {
    let state0 = PhaseState::from_loop(lp, system)?;
    let traj = integrate(&state0, system.masses(), 1.0, h)?;
    Ok(traj.last().sup_distance(&state0))
}
