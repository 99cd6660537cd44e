//! On-disk formats: loop and state files (JSON), trajectories (CSV), and
//! atomic writes so a failing command never leaves a partial file behind.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use choreo::{DiscreteLoop, PhaseState, Trajectory, UnitPoint, Vec3};
use serde::Deserialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Formats `x` with `digits` significant digits, in fixed notation for
/// moderate magnitudes and scientific notation otherwise.
pub fn sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-4..digits as i32).contains(&exp) {
        format!("{:.*}", (digits as i32 - 1 - exp) as usize, x)
    } else {
        sci
    }
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

/// Full precision: 17 significant digits reproduce any `f64` exactly.
fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_triples(out: &mut String, key: &str, rows: impl Iterator<Item = Vec3>) {
    let _ = write!(out, "  \"{key}\": [");
    for (k, v) in rows.enumerate() {
        let sep = if k == 0 { "\n" } else { ",\n" };
        let _ = write!(out, "{sep}    [{}, {}, {}]", exact(v.x), exact(v.y), exact(v.z));
    }
    out.push_str("\n  ]");
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn loop_to_json(lp: &DiscreteLoop) -> String {
    let mut s = format!("{{\n  \"N\": {},\n", lp.len());
    write_triples(&mut s, "samples", lp.samples().iter().map(|p| *p.vector()));
    s.push_str("\n}\n");
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopFile {
    #[serde(rename = "N")]
    n: usize,
    samples: Vec<[f64; 3]>,
}

fn parse_point(path: &Path, what: &str, k: usize, p: [f64; 3]) -> CliResult<UnitPoint> {
    UnitPoint::new(p[0], p[1], p[2]).map_err(|e| CliError::parse(path, format!("{what} {k}: {e}")))
}

pub fn loop_from_json(path: &Path, text: &str) -> CliResult<DiscreteLoop> {
    let file: LoopFile = serde_json::from_str(text).map_err(|e| CliError::parse(path, e.to_string()))?;
    if file.n != file.samples.len() {
        return Err(CliError::parse(
            path,
            format!("N = {} but {} samples listed", file.n, file.samples.len()),
        ));
    }
    let samples = file
        .samples
        .into_iter()
        .enumerate()
        .map(|(k, p)| parse_point(path, "sample", k, p))
        .collect::<CliResult<Vec<_>>>()?;
    DiscreteLoop::new(samples).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn read_loop(path: &Path) -> CliResult<DiscreteLoop> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    loop_from_json(path, &text)
}

pub fn write_loop(path: &Path, lp: &DiscreteLoop) -> CliResult<()> {
    write_atomic(path, loop_to_json(lp).as_bytes())
}

pub fn state_to_json(state: &PhaseState) -> String {
    let mut s = String::from("{\n");
    write_triples(&mut s, "positions", state.positions.iter().map(|p| *p.vector()));
    s.push_str(",\n");
    write_triples(&mut s, "velocities", state.velocities.iter().copied());
    s.push_str("\n}\n");
    s
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    positions: Vec<[f64; 3]>,
    velocities: Vec<[f64; 3]>,
}

pub fn state_from_json(path: &Path, text: &str) -> CliResult<PhaseState> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| CliError::parse(path, e.to_string()))?;
    let positions = file
        .positions
        .into_iter()
        .enumerate()
        .map(|(k, p)| parse_point(path, "position", k, p))
        .collect::<CliResult<Vec<_>>>()?;
    let velocities = file.velocities.into_iter().map(Vec3::from).collect();
    PhaseState::new(positions, velocities).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn read_state(path: &Path) -> CliResult<PhaseState> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    state_from_json(path, &text)
}

pub const TRAJECTORY_HEADER: &str = "t,body,x,y,z,vx,vy,vz";

/// One row per body and time, grouped by time.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let bodies = traj.first().n();
    let mut s = String::with_capacity(traj.states.len() * bodies * 160);
    s.push_str(TRAJECTORY_HEADER);
    s.push('\n');
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let t = sig(*t, 12);
        for (i, (q, v)) in state.positions.iter().zip(&state.velocities).enumerate() {
            let q = q.vector();
            let _ = writeln!(
                s,
                "{t},{i},{},{},{},{},{},{}",
                exact(q.x),
                exact(q.y),
                exact(q.z),
                exact(v.x),
                exact(v.y),
                exact(v.z)
            );
        }
    }
    s
}
