//! Projected gradient descent of the discrete action over symmetric loops.
//!
//! Each iteration moves every sample against its tangent gradient, pulls it
//! back onto the sphere by normalization and, in symmetric mode, projects the
//! loop back onto the fixed points of the half-period reflection and the
//! time reversal. A backtracking line search accepts only steps that keep
//! the bodies apart and strictly lower the action. The trial step of each
//! line search is the Barzilai-Borwein estimate from the previous iterate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{action, action_difference, action_gradient, collision_bound, sup_norm};
use crate::choreography::{min_pair_separation, symmetrize, BodySystem, DiscreteLoop};
use crate::error::{Error, Result};
use crate::geometry::{UnitPoint, Vec3, COLLISION_EPS};

/// Sample count used when none is given.
pub const DEFAULT_SAMPLES: usize = 516;

/// Random tangent kick applied to the starting loop (exploration only).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub seed: u64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Stop once the sup-norm of the tangent gradient drops below this.
    pub grad_tol: f64,
    /// Collision guard in radians.
    pub min_separation: f64,
    pub step_init: f64,
    pub step_shrink: f64,
    /// Project onto the symmetric loops after every step (three bodies only).
    pub symmetric: bool,
    pub perturbation: Option<Perturbation>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iters: 100_000,
            grad_tol: 1e-8,
            min_separation: 1e-3,
            step_init: 1e-2,
            step_shrink: 0.5,
            symmetric: true,
            perturbation: None,
        }
    }
}

impl MinimizeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidOption(format!(
                "grad_tol = {} must be positive",
                self.grad_tol
            )));
        }
        if !(self.min_separation >= 10.0 * COLLISION_EPS) {
            return Err(Error::InvalidOption(format!(
                "min_separation = {} must be at least {}",
                self.min_separation,
                10.0 * COLLISION_EPS
            )));
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return Err(Error::InvalidOption(format!(
                "step_init = {} must be positive",
                self.step_init
            )));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::InvalidOption(format!(
                "step_shrink = {} must lie in (0, 1)",
                self.step_shrink
            )));
        }
        if let Some(p) = &self.perturbation {
            if !(p.amplitude >= 0.0 && p.amplitude.is_finite()) {
                return Err(Error::InvalidOption(format!("perturbation amplitude {}", p.amplitude)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search could not find a decrease above roundoff.
    StepUnderflow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub termination: Termination,
    pub iterations: usize,
    /// Starting action followed by the action after each accepted step.
    pub action_history: Vec<f64>,
    /// Gradient sup-norm at each entry of `action_history`.
    pub grad_norm_history: Vec<f64>,
    pub final_action: f64,
    pub final_grad_norm: f64,
    pub final_min_separation: f64,
    pub below_collision_bound: bool,
}

impl MinimizeReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

fn retract(lp: &DiscreteLoop, gradient: &[Vec3], step: f64) -> Result<DiscreteLoop> {
    if lp.len() != gradient.len() {
        return Err(Error::InvalidLoop("gradient length does not match the loop".into()));
    }
    let samples = lp
        .samples()
        .iter()
        .zip(gradient)
        .enumerate()
        .map(|(j, (q, g))| UnitPoint::normalize(q.vector() - g * step).map_err(|e| e.at_sample(j)))
        .collect::<Result<Vec<_>>>()?;
    DiscreteLoop::new(samples)
}

/// `normalize(Q_j - step g_j)` for every sample, followed by symmetrization.
pub fn descent_step(lp: &DiscreteLoop, gradient: &[Vec3], step: f64) -> Result<DiscreteLoop> {
    if !(step > 0.0) {
        return Err(Error::InvalidOption(format!("step = {step} must be positive")));
    }
    symmetrize(&retract(lp, gradient, step)?)
}

/// Adds a seeded random tangent displacement of the given amplitude to
/// every sample.
pub fn perturb(lp: &DiscreteLoop, perturbation: &Perturbation) -> Result<DiscreteLoop> {
    let mut rng = ChaCha8Rng::seed_from_u64(perturbation.seed);
    let samples = lp
        .samples()
        .iter()
        .map(|q| {
            let kick = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            UnitPoint::normalize(q.vector() + q.project(&kick) * perturbation.amplitude)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteLoop::new(samples)
}

fn field_dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Largest trial step the line search will start from.
const MAX_TRIAL_STEP: f64 = 1.0;

/// Minimizes the discrete action starting from `loop0`.
pub fn minimize(
    loop0: &DiscreteLoop,
    system: &BodySystem,
    opts: &MinimizeOptions,
) -> Result<(DiscreteLoop, MinimizeReport)> {
    opts.validate()?;
    if opts.symmetric && system.n() != 3 {
        return Err(Error::InvalidOption(format!(
            "symmetric mode needs exactly 3 bodies, got {}",
            system.n()
        )));
    }
    let project = |lp: DiscreteLoop| -> Result<DiscreteLoop> {
        if opts.symmetric {
            symmetrize(&lp)
        } else {
            Ok(lp)
        }
    };

    let mut current = match &opts.perturbation {
        Some(p) => perturb(loop0, p)?,
        None => loop0.clone(),
    };
    current = project(current)?;
    if !(min_pair_separation(&current, system)? >= opts.min_separation) {
        return Err(Error::GuardExhausted {
            min_separation: opts.min_separation,
        });
    }

    let start = action(&current, system)?.total;
    if !start.is_finite() {
        return Err(Error::NonFinite(start));
    }
    let mut history = vec![start];
    let mut value = start;
    let mut gradient = action_gradient(&current, system)?.total;
    let mut grad_norms = vec![sup_norm(&gradient)];
    let mut previous: Option<(Vec<Vec3>, Vec<Vec3>)> = None;
    let mut iterations = 0;

    let termination = loop {
        if sup_norm(&gradient) < opts.grad_tol {
            break Termination::Converged;
        }
        if iterations >= opts.max_iters {
            break Termination::MaxIterations;
        }

        let mut step = opts.step_init;
        if let Some((points, grad)) = &previous {
            let s: Vec<Vec3> = current
                .samples()
                .iter()
                .zip(points)
                .map(|(a, b)| a.vector() - b)
                .collect();
            let y: Vec<Vec3> = gradient.iter().zip(grad).map(|(a, b)| a - b).collect();
            let sy = field_dot(&s, &y);
            let bb = field_dot(&s, &s) / sy;
            if sy > 0.0 && bb.is_finite() && bb > 0.0 {
                step = bb.min(MAX_TRIAL_STEP);
            }
        }

        let mut accepted = None;
        let mut guard_only = true;
        while step > f64::MIN_POSITIVE {
            let candidate = match retract(&current, &gradient, step).and_then(&project) {
                Ok(c) => c,
                Err(_) => {
                    guard_only = false;
                    step *= opts.step_shrink;
                    continue;
                }
            };
            if candidate == current {
                guard_only = false;
                break;
            }
            if min_pair_separation(&candidate, system)? < opts.min_separation {
                step *= opts.step_shrink;
                continue;
            }
            guard_only = false;
            match action_difference(&current, &candidate, system) {
                Ok(d) if !d.is_finite() => return Err(Error::NonFinite(d)),
                Ok(d) if d < 0.0 => {
                    accepted = Some((candidate, d));
                    break;
                }
                Ok(_) => {}
                Err(e) if e.is_singular() => {}
                Err(e) => return Err(e),
            }
            step *= opts.step_shrink;
        }

        let Some((candidate, decrease)) = accepted else {
            if guard_only {
                return Err(Error::GuardExhausted {
                    min_separation: opts.min_separation,
                });
            }
            break Termination::StepUnderflow;
        };
        let old_points: Vec<Vec3> = current.samples().iter().map(|p| *p.vector()).collect();
        previous = Some((old_points, std::mem::take(&mut gradient)));
        current = candidate;
        value += decrease;
        history.push(value);
        gradient = action_gradient(&current, system)?.total;
        grad_norms.push(sup_norm(&gradient));
        iterations += 1;
    };

    let final_action = action(&current, system)?.total;
    if !final_action.is_finite() {
        return Err(Error::NonFinite(final_action));
    }
    let report = MinimizeReport {
        termination,
        iterations,
        action_history: history,
        grad_norm_history: grad_norms,
        final_action,
        final_grad_norm: sup_norm(&gradient),
        final_min_separation: min_pair_separation(&current, system)?,
        below_collision_bound: final_action < collision_bound(),
    };
    Ok((current, report))
}
