//! Run configuration: a single strict JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use choreo::{test_loop, BodySystem, DiscreteLoop, MinimizeOptions, DEFAULT_SAMPLES};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::formats::read_loop;

/// Where the starting loop comes from.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(from = "String")]
#[derive(Default)]
pub enum LoopSource {
    #[default]
    TestLoop,
    File(PathBuf),
}

impl From<String> for LoopSource {
    fn from(s: String) -> Self {
        if s == "test-loop" {
            LoopSource::TestLoop
        } else {
            LoopSource::File(PathBuf::from(s))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub period: f64,
    pub step: f64,
    /// Explicit initial state; otherwise the state is taken from the loop.
    pub initial_state: Option<PathBuf>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            period: 1.0,
            step: 1e-4,
            initial_state: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub el_residual: f64,
    pub symmetry: f64,
    pub closure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            el_residual: 1e-3,
            symmetry: 1e-10,
            closure: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    #[serde(rename = "loop")]
    pub loop_file: PathBuf,
    pub report: PathBuf,
    pub trajectory: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            loop_file: "loop.json".into(),
            report: "report.json".into(),
            trajectory: "trajectory.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    /// Unit masses when absent.
    pub masses: Option<Vec<f64>>,
    #[serde(alias = "N")]
    pub samples: Option<usize>,
    pub loop_source: LoopSource,
    pub minimizer: MinimizeOptions,
    pub integrator: IntegratorConfig,
    pub verify: Tolerances,
    pub output: Outputs,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 3,
            masses: None,
            samples: None,
            loop_source: LoopSource::TestLoop,
            minimizer: MinimizeOptions::default(),
            integrator: IntegratorConfig::default(),
            verify: Tolerances::default(),
            output: Outputs::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::from_json(&text).map_err(|e| match e {
                    CliError::Config(msg) => CliError::Config(format!("{}: {msg}", p.display())),
                    other => other,
                })
            }
        }
    }

    pub fn system(&self) -> CliResult<BodySystem> {
        if self.n == 0 {
            return Err(CliError::Config("n must be at least 1".into()));
        }
        let masses = self.masses.clone().unwrap_or_else(|| vec![1.0; self.n]);
        if masses.len() != self.n {
            return Err(CliError::Config(format!(
                "n = {} but {} masses given",
                self.n,
                masses.len()
            )));
        }
        Ok(BodySystem::choreography(masses)?)
    }

    /// Builds or reads the starting loop and checks it against the body count.
    pub fn load_loop(&self, system: &BodySystem) -> CliResult<DiscreteLoop> {
        let lp = match &self.loop_source {
            LoopSource::TestLoop => test_loop(self.samples.unwrap_or(DEFAULT_SAMPLES))?,
            LoopSource::File(path) => {
                let lp = read_loop(path)?;
                if let Some(n) = self.samples {
                    if n != lp.len() {
                        return Err(CliError::Config(format!(
                            "samples = {n} but {} holds {} samples",
                            path.display(),
                            lp.len()
                        )));
                    }
                }
                lp
            }
        };
        system.sample_shifts(lp.len())?;
        Ok(lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_aliases() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        let c =
            RunConfig::from_json(r#"{"N": 240, "loop_source": "a.json", "minimizer": {"grad_tol": 1e-6}}"#).unwrap();
        assert_eq!(c.samples, Some(240));
        assert_eq!(c.loop_source, LoopSource::File("a.json".into()));
        assert_eq!(c.minimizer.grad_tol, 1e-6);
        assert_eq!(c.minimizer.max_iters, MinimizeOptions::default().max_iters);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"verify": {"el_tol": 1e-3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"minimizer": {"gradtol": 1e-3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"sample": 12}"#).is_err());
    }

    #[test]
    fn system_validation() {
        let mut c = RunConfig::default();
        assert_eq!(c.system().unwrap().n(), 3);
        c.masses = Some(vec![1.0, 2.0]);
        assert!(c.system().is_err());
        c.n = 0;
        assert!(c.system().is_err());
    }

    #[test]
    fn test_loop_needs_divisible_sample_count() {
        let mut c = RunConfig::default();
        let sys = c.system().unwrap();
        assert_eq!(c.load_loop(&sys).unwrap().len(), DEFAULT_SAMPLES);
        c.samples = Some(512);
        assert!(c.load_loop(&sys).is_err());
    }
}
