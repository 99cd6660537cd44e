use thiserror::Error;

/// Errors raised by the geometry, loop, action and integration routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("collision between bodies {i} and {j} (geodesic distance {distance:e} rad)")]
    Collision { i: usize, j: usize, distance: f64 },

    #[error("bodies {i} and {j} are antipodal (geodesic distance {distance} rad)")]
    Antipodal { i: usize, j: usize, distance: f64 },

    #[error("chordal distance {0} outside the open interval (0, 2)")]
    ChordalDomain(f64),

    #[error("vector is not of unit length (|v|^2 - 1 = {0:e})")]
    NotUnit(f64),

    #[error("vector is not tangent to its base point (base . v = {0:e})")]
    NotTangent(f64),

    #[error("cannot project a vector of norm {0:e} onto the sphere")]
    Degenerate(f64),

    #[error("{what} = {value} is not divisible by {divisor}")]
    Indivisible {
        what: &'static str,
        value: usize,
        divisor: usize,
    },

    #[error("invalid loop: {0}")]
    InvalidLoop(String),

    #[error("invalid body system: {0}")]
    InvalidSystem(String),

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("at sample {sample}: {source}")]
    AtSample { sample: usize, source: Box<Error> },

    #[error("at t = {time}: {source}")]
    AtTime { time: f64, source: Box<Error> },

    #[error("no admissible step keeps the minimum pair separation above {min_separation} rad")]
    GuardExhausted { min_separation: f64 },

    #[error("action evaluated to a non-finite value ({0})")]
    NonFinite(f64),
}

impl Error {
    pub(crate) fn at_sample(self, sample: usize) -> Self {
        Error::AtSample {
            sample,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_time(self, time: f64) -> Self {
        Error::AtTime {
            time,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a collision or antipodal singularity.
    pub fn is_singular(&self) -> bool {
        match self {
            Error::Collision { .. } | Error::Antipodal { .. } => true,
            Error::AtSample { source, .. } | Error::AtTime { source, .. } => source.is_singular(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
