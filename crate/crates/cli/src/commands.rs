//! The subcommands as library functions. Each computes a typed result;
//! [`run`] prints it, writes files and maps failures to exit codes.

use std::io::Write;
use std::path::{Path, PathBuf};

use choreo::{
    action, closure_error, collision_bound, el_residual, energy, integrate, min_pair_separation, minimize, step_count,
    symmetry_residuals, BodySystem, DiscreteLoop, Error, MinimizeReport, PhaseState, Termination, Trajectory,
};
use serde::Serialize;

use crate::args::{Cli, Command, Common};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::formats::{read_loop, read_state, round_sig, sig, trajectory_csv, write_atomic, write_loop};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_COLLISION: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;
pub const EXIT_FAILED: i32 = 5;

/// Significant digits of every number in printed and JSON reports.
pub const REPORT_DIGITS: usize = 10;

fn r(x: f64) -> f64 {
    round_sig(x, REPORT_DIGITS)
}

fn verdict(below: bool) -> &'static str {
    if below {
        "below bound"
    } else {
        "not below bound"
    }
}

/// Applies command-line overrides to a loaded configuration.
pub fn resolve_config(common: &Common) -> CliResult<RunConfig> {
    let mut config = RunConfig::load(common.config.as_deref())?;
    if let Some(n) = common.samples {
        config.samples = Some(n);
    }
    Ok(config)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub samples: usize,
    pub kinetic: f64,
    pub potential_integral: f64,
    pub action: f64,
    pub collision_bound: f64,
    pub below_bound: bool,
    pub min_separation: f64,
}

impl EvalReport {
    fn lines(&self) -> Vec<String> {
        vec![
            format!("samples            {}", self.samples),
            format!("kinetic            {}", sig(self.kinetic, REPORT_DIGITS)),
            format!("potential integral {}", sig(self.potential_integral, REPORT_DIGITS)),
            format!("action             {}", sig(self.action, REPORT_DIGITS)),
            format!("collision bound    {}", sig(self.collision_bound, REPORT_DIGITS)),
            format!("verdict            {}", verdict(self.below_bound)),
            format!("min separation     {}", sig(self.min_separation, REPORT_DIGITS)),
        ]
    }
}

pub fn eval(config: &RunConfig) -> CliResult<EvalReport> {
    let system = config.system()?;
    let lp = config.load_loop(&system)?;
    let a = action(&lp, &system)?;
    let bound = collision_bound();
    Ok(EvalReport {
        samples: lp.len(),
        kinetic: a.kinetic,
        potential_integral: a.potential_integral,
        action: a.total,
        collision_bound: bound,
        below_bound: a.total < bound,
        min_separation: min_pair_separation(&lp, &system)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimizeSummary {
    pub samples: usize,
    pub masses: Vec<f64>,
    pub termination: Termination,
    pub iterations: usize,
    pub starting_action: f64,
    pub final_action: f64,
    pub final_grad_norm: f64,
    pub final_min_separation: f64,
    pub collision_bound: f64,
    pub below_collision_bound: bool,
    pub el_residual: f64,
    pub symmetry_residual_e2: f64,
    pub symmetry_residual_e3: f64,
    pub action_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
}

impl MinimizeSummary {
    fn new(lp: &DiscreteLoop, system: &BodySystem, report: &MinimizeReport) -> CliResult<Self> {
        let (e2, e3) = symmetry_residuals(lp);
        Ok(MinimizeSummary {
            samples: lp.len(),
            masses: system.masses().to_vec(),
            termination: report.termination,
            iterations: report.iterations,
            starting_action: r(report.action_history[0]),
            final_action: r(report.final_action),
            final_grad_norm: r(report.final_grad_norm),
            final_min_separation: r(report.final_min_separation),
            collision_bound: r(collision_bound()),
            below_collision_bound: report.below_collision_bound,
            el_residual: r(el_residual(lp, system)?),
            symmetry_residual_e2: r(e2),
            symmetry_residual_e3: r(e3),
            action_history: report.action_history.iter().copied().map(r).collect(),
            grad_norm_history: report.grad_norm_history.iter().copied().map(r).collect(),
        })
    }

    fn lines(&self) -> Vec<String> {
        vec![
            format!("termination        {:?}", self.termination),
            format!("iterations         {}", self.iterations),
            format!("starting action    {}", sig(self.starting_action, REPORT_DIGITS)),
            format!("final action       {}", sig(self.final_action, REPORT_DIGITS)),
            format!("gradient norm      {}", sig(self.final_grad_norm, REPORT_DIGITS)),
            format!("min separation     {}", sig(self.final_min_separation, REPORT_DIGITS)),
            format!("collision bound    {}", sig(self.collision_bound, REPORT_DIGITS)),
            format!("verdict            {}", verdict(self.below_collision_bound)),
            format!("el residual        {}", sig(self.el_residual, REPORT_DIGITS)),
        ]
    }
}

pub struct MinimizeOutcome {
    pub loop_: DiscreteLoop,
    pub report: MinimizeReport,
    pub summary: MinimizeSummary,
}

impl MinimizeOutcome {
    pub fn exit_code(&self, min_separation: f64) -> i32 {
        match self.report.termination {
            Termination::Converged
                if self.report.below_collision_bound && self.report.final_min_separation >= min_separation =>
            {
                EXIT_OK
            }
            Termination::Converged => EXIT_FAILED,
            Termination::MaxIterations | Termination::StepUnderflow => EXIT_NOT_CONVERGED,
        }
    }
}

pub fn run_minimize(config: &RunConfig) -> CliResult<MinimizeOutcome> {
    config.minimizer.validate()?;
    let system = config.system()?;
    let lp0 = config.load_loop(&system)?;
    let (lp, report) = minimize(&lp0, &system, &config.minimizer)?;
    let summary = MinimizeSummary::new(&lp, &system, &report)?;
    Ok(MinimizeOutcome {
        loop_: lp,
        report,
        summary,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub samples: usize,
    pub el_residual: f64,
    pub symmetry_residual_e2: f64,
    pub symmetry_residual_e3: f64,
    pub action: f64,
    pub collision_bound: f64,
    pub below_bound: bool,
    pub closure_error: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

impl VerifyReport {
    fn lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("samples            {}", self.samples),
            format!("el residual        {}", sig(self.el_residual, REPORT_DIGITS)),
            format!("symmetry e2        {}", sig(self.symmetry_residual_e2, REPORT_DIGITS)),
            format!("symmetry e3        {}", sig(self.symmetry_residual_e3, REPORT_DIGITS)),
            format!("action             {}", sig(self.action, REPORT_DIGITS)),
            format!("collision bound    {}", sig(self.collision_bound, REPORT_DIGITS)),
            format!("verdict            {}", verdict(self.below_bound)),
            format!("closure error      {}", sig(self.closure_error, REPORT_DIGITS)),
        ];
        v.extend(self.failures.iter().map(|f| format!("FAILED: {f}")));
        v.push(
            if self.passed {
                "verification passed"
            } else {
                "verification failed"
            }
            .to_string(),
        );
        v
    }
}

/// Checks `lp` against the equations of motion, the symmetries (in
/// symmetric mode), the collision bound and the return map.
pub fn verify(lp: &DiscreteLoop, config: &RunConfig) -> CliResult<VerifyReport> {
    let system = config.system()?;
    system.sample_shifts(lp.len())?;
    step_count(1.0, config.integrator.step)?;
    let tol = &config.verify;
    let el = el_residual(lp, &system)?;
    let (e2, e3) = symmetry_residuals(lp);
    let a = action(lp, &system)?.total;
    let bound = collision_bound();
    let closure = closure_error(lp, &system, config.integrator.step)?;

    let mut failures = Vec::new();
    if !(el <= tol.el_residual) {
        failures.push(format!(
            "el residual {} exceeds {}",
            sig(el, REPORT_DIGITS),
            tol.el_residual
        ));
    }
    if config.minimizer.symmetric && !(e2 <= tol.symmetry && e3 <= tol.symmetry) {
        failures.push(format!("symmetry residuals exceed {}", tol.symmetry));
    }
    if !(a < bound) {
        failures.push("action is not below the collision bound".into());
    }
    if !(closure <= tol.closure) {
        failures.push(format!(
            "closure error {} exceeds {}",
            sig(closure, REPORT_DIGITS),
            tol.closure
        ));
    }
    Ok(VerifyReport {
        samples: lp.len(),
        el_residual: r(el),
        symmetry_residual_e2: r(e2),
        symmetry_residual_e3: r(e3),
        action: r(a),
        collision_bound: r(bound),
        below_bound: a < bound,
        closure_error: r(closure),
        passed: failures.is_empty(),
        failures,
    })
}

pub struct IntegrateOutcome {
    pub trajectory: Trajectory,
    pub initial_energy: f64,
    /// Sup-norm distance between the final and initial states.
    pub return_error: f64,
}

impl IntegrateOutcome {
    fn lines(&self) -> Vec<String> {
        vec![
            format!("steps              {}", self.trajectory.states.len() - 1),
            format!("step               {}", sig(self.trajectory.step, REPORT_DIGITS)),
            format!("initial energy     {}", sig(self.initial_energy, REPORT_DIGITS)),
            format!(
                "energy drift       {}",
                sig(self.trajectory.energy_drift, REPORT_DIGITS)
            ),
            format!("closure error      {}", sig(self.return_error, REPORT_DIGITS)),
        ]
    }
}

pub fn run_integrate(config: &RunConfig) -> CliResult<IntegrateOutcome> {
    let system = config.system()?;
    step_count(config.integrator.period, config.integrator.step)?;
    let state = match &config.integrator.initial_state {
        Some(path) => {
            let s = read_state(path)?;
            if s.n() != system.n() {
                return Err(CliError::Config(format!(
                    "{} holds {} bodies but n = {}",
                    path.display(),
                    s.n(),
                    system.n()
                )));
            }
            s
        }
        None => PhaseState::from_loop(&config.load_loop(&system)?, &system)?,
    };
    let masses = system.masses();
    let trajectory = integrate(&state, masses, config.integrator.period, config.integrator.step)?;
    Ok(IntegrateOutcome {
        initial_energy: energy(&state, masses)?,
        return_error: trajectory.last().sup_distance(&state),
        trajectory,
    })
}

fn emit(out: &mut dyn Write, lines: &[String]) {
    for l in lines {
        let _ = writeln!(out, "{l}");
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn singular_or(e: &CliError, singular: i32, otherwise: i32) -> i32 {
    match e {
        CliError::Core(err) if err.is_singular() => singular,
        _ => otherwise,
    }
}

fn fail(err: &mut dyn Write, code: i32, e: &CliError) -> i32 {
    let _ = writeln!(err, "error: {e}");
    code
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match &cli.command {
        Command::Bound => {
            let _ = writeln!(out, "{}", collision_bound());
            EXIT_OK
        }
        Command::Eval(common) => {
            let result = resolve_config(common).and_then(|c| eval(&c));
            match result {
                Ok(report) => {
                    emit(out, &report.lines());
                    if let Some(path) = &common.out {
                        if let Err(e) = write_json(path, &report) {
                            return fail(err, EXIT_CONFIG, &e);
                        }
                    }
                    EXIT_OK
                }
                Err(e) => {
                    let code = singular_or(&e, EXIT_COLLISION, EXIT_CONFIG);
                    fail(err, code, &e)
                }
            }
        }
        Command::Minimize(common) => {
            let config = match resolve_config(common) {
                Ok(mut c) => {
                    if let Some(t) = common.tol {
                        c.minimizer.grad_tol = t;
                    }
                    c
                }
                Err(e) => return fail(err, EXIT_CONFIG, &e),
            };
            let outcome = match run_minimize(&config) {
                Ok(o) => o,
                Err(e) => {
                    let code = match &e {
                        CliError::Core(Error::GuardExhausted { .. }) => EXIT_GUARD,
                        _ => EXIT_CONFIG,
                    };
                    return fail(err, code, &e);
                }
            };
            emit(out, &outcome.summary.lines());
            let loop_path: PathBuf = common.out.clone().unwrap_or_else(|| config.output.loop_file.clone());
            let written = write_loop(&loop_path, &outcome.loop_)
                .and_then(|_| write_json(&config.output.report, &outcome.summary));
            if let Err(e) = written {
                return fail(err, EXIT_CONFIG, &e);
            }
            let _ = writeln!(out, "loop written to   {}", loop_path.display());
            let _ = writeln!(out, "report written to {}", config.output.report.display());
            outcome.exit_code(config.minimizer.min_separation)
        }
        Command::Verify { loop_file, common } => {
            let config = match resolve_config(common) {
                Ok(mut c) => {
                    if let Some(t) = common.tol {
                        c.verify.el_residual = t;
                    }
                    c
                }
                Err(e) => return fail(err, EXIT_CONFIG, &e),
            };
            let lp = match read_loop(loop_file) {
                Ok(lp) => lp,
                Err(e) => return fail(err, EXIT_CONFIG, &e),
            };
            match verify(&lp, &config) {
                Ok(report) => {
                    emit(out, &report.lines());
                    if let Some(path) = &common.out {
                        if let Err(e) = write_json(path, &report) {
                            return fail(err, EXIT_CONFIG, &e);
                        }
                    }
                    if report.passed {
                        EXIT_OK
                    } else {
                        EXIT_FAILED
                    }
                }
                Err(e) => {
                    let code = singular_or(&e, EXIT_FAILED, EXIT_CONFIG);
                    fail(err, code, &e)
                }
            }
        }
        Command::Integrate(common) => {
            let result = resolve_config(common).and_then(|c| run_integrate(&c).map(|o| (c, o)));
            match result {
                Ok((config, outcome)) => {
                    emit(out, &outcome.lines());
                    let path = common.out.clone().unwrap_or_else(|| config.output.trajectory.clone());
                    if let Err(e) = write_atomic(&path, trajectory_csv(&outcome.trajectory).as_bytes()) {
                        return fail(err, EXIT_CONFIG, &e);
                    }
                    let _ = writeln!(out, "trajectory written to {}", path.display());
                    EXIT_OK
                }
                Err(e) => {
                    if let CliError::Core(Error::AtTime { time, source }) = &e {
                        if source.is_singular() {
                            let _ = writeln!(err, "integration aborted at t = {}: {source}", sig(*time, 12));
                            return EXIT_COLLISION;
                        }
                    }
                    let code = singular_or(&e, EXIT_COLLISION, EXIT_CONFIG);
                    fail(err, code, &e)
                }
            }
        }
    }
}
