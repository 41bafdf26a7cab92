//! Command dispatch for the `mid-delay` binary: JSON in, CSV or JSON out.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use mid_delay::feedback::{
    circuit_to_ddae, design_gains, gain_equation_residuals, verify_design, verify_design_in,
    CircuitParams, FeedbackError, FeedbackGains, FeedbackPlant, VerifyReport,
};
use mid_delay::mid::{ddae_mid, ddae_root_lattice, retarded_mid, MidDdaeConditions, MidError};
use mid_delay::quasipoly::{
    DdaeScalar, MatrixDdae, Multiplicity, Quasipolynomial, RetardedSpec, DEFAULT_MULTIPLICITY_TOL,
};
use mid_delay::rootfinder::{find_roots, roots_to_csv, QuasiEvaluator, Rectangle, RootError};
use mid_delay::simulate::{fit_decay_rate, simulate, History, SimError};
use mid_delay::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Roots of a characteristic function in a window, as CSV.
    Roots,
    /// Maximal-multiplicity coefficients of an order-n retarded equation.
    MidRetarded,
    /// Triple-root conditions of the scalar DDAE.
    MidDdae,
    /// Delayed output feedback gains for a plant.
    Design,
    /// Multiplicity and dominance report for a designed loop.
    Verify,
    /// Time-domain simulation of a closed loop, as CSV.
    Simulate,
    /// Scalar DDAE of a transmission-line circuit.
    Circuit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input_path: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub window: Option<Rectangle>,
    pub tol: Option<f64>,
    pub s0: Option<f64>,
    pub tau: Option<f64>,
    pub n: Option<usize>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub k: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input_path: None,
            output_path: None,
            window: None,
            tol: None,
            s0: None,
            tau: None,
            n: None,
            t_end: None,
            dt: None,
            k: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Validation { code: &'static str, message: String },
    #[error("{message}")]
    Numerical { code: &'static str, message: String },
}

impl CliError {
    fn validation(code: &'static str, message: impl Into<String>) -> Self {
        CliError::Validation {
            code,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Validation { code, .. } | CliError::Numerical { code, .. } => code,
        }
    }

    /// One-line JSON diagnostic.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "code": self.code(), "exit": self.exit_code(), "message": self.to_string() }
        })
        .to_string()
    }
}

impl From<RootError> for CliError {
    fn from(e: RootError) -> Self {
        let code = match e {
            RootError::BoundaryRoot(_) => "boundary-root",
            RootError::NonConvergent(_) => "non-convergent",
            RootError::MaxDepth => "max-depth",
            RootError::Unbounded => "unbounded",
            RootError::NotARoot(_) => "not-a-root",
            RootError::InvalidRectangle(_) => {
                return CliError::validation("invalid-window", e.to_string())
            }
        };
        CliError::Numerical {
            code,
            message: e.to_string(),
        }
    }
}

impl From<FeedbackError> for CliError {
    fn from(e: FeedbackError) -> Self {
        let code = match e {
            FeedbackError::NotStabilizable => "not-stabilizable",
            FeedbackError::Unsolvable => "unsolvable",
        };
        CliError::validation(code, e.to_string())
    }
}

impl From<MidError> for CliError {
    fn from(e: MidError) -> Self {
        CliError::validation("invalid-argument", e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let code = match e {
            SimError::MultipleDelays(_) => "multiple-delays",
            SimError::GridMismatch { .. } => "grid-mismatch",
            SimError::Horizon(_) => "horizon",
            SimError::Dimension(_) => "dimension",
            SimError::Degenerate => "degenerate-fit",
            SimError::Window(..) => "invalid-window",
        };
        CliError::validation(code, e.to_string())
    }
}

/// Text produced by a command: the main artifact, plus an optional JSON
/// summary for commands whose artifact is CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub primary: String,
    pub summary: Option<String>,
}

/// Runs a command, writing the artifact to `output_path` (or `out`) and
/// diagnostics to `err`. Returns the process exit status.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(config).and_then(|e| emit(config, &e, out, err)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit_code()
        }
    }
}

fn emit(
    config: &RunConfig,
    e: &Emitted,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let io = |x: std::io::Error| CliError::validation("io", x.to_string());
    match &config.output_path {
        Some(path) => {
            fs::write(path, &e.primary).map_err(io)?;
            if let Some(s) = &e.summary {
                writeln!(out, "{s}").map_err(io)?;
            }
        }
        None => {
            out.write_all(e.primary.as_bytes()).map_err(io)?;
            if let Some(s) = &e.summary {
                writeln!(err, "{s}").map_err(io)?;
            }
        }
    }
    Ok(())
}

/// Computes a command's output without touching the output path.
pub fn execute(config: &RunConfig) -> Result<Emitted, CliError> {
    if let Some(tol) = config.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::validation(
                "invalid-argument",
                format!("--tol must be positive, got {tol}"),
            ));
        }
    }
    match config.command {
        Command::Roots => roots(config),
        Command::MidRetarded => mid_retarded(config),
        Command::MidDdae => mid_ddae_cmd(config),
        Command::Design => design(config),
        Command::Verify => verify(config),
        Command::Simulate => simulate_cmd(config),
        Command::Circuit => circuit(config),
    }
}

fn read_input<T: for<'de> Deserialize<'de>>(config: &RunConfig) -> Result<T, CliError> {
    let path = config.input_path.as_ref().ok_or_else(|| {
        CliError::validation("missing-input", "--input is required for this command")
    })?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation("io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::validation("invalid-input", format!("{}: {e}", path.display())))
}

fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::validation("missing-argument", format!("{flag} is required")))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn json_only(value: impl Serialize) -> Result<Emitted, CliError> {
    Ok(Emitted {
        primary: to_json(&value),
        summary: None,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CharacteristicInput {
    Quasi(Quasipolynomial),
    Loop {
        plant: FeedbackPlant,
        gains: FeedbackGains,
    },
    Plant(FeedbackPlant),
    Retarded(RetardedSpec),
    Scalar(DdaeScalar),
}

fn roots(config: &RunConfig) -> Result<Emitted, CliError> {
    let q = match read_input::<CharacteristicInput>(config)? {
        CharacteristicInput::Quasi(q) => q,
        CharacteristicInput::Loop { plant, gains } => {
            Quasipolynomial::from_feedback(&plant, &gains)
        }
        CharacteristicInput::Plant(plant) => {
            Quasipolynomial::from_feedback(&plant, &design_gains(&plant)?.0)
        }
        CharacteristicInput::Retarded(spec) => Quasipolynomial::from_retarded(&spec),
        CharacteristicInput::Scalar(sys) => Quasipolynomial::from_ddae_scalar(&sys),
    };
    let window = require(config.window, "--window")?;
    let found = find_roots(
        &QuasiEvaluator::new(&q),
        &window,
        config.tol.unwrap_or(1e-10),
    )?;
    Ok(Emitted {
        primary: roots_to_csv(&found),
        summary: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub s0: f64,
    pub multiplicity: Multiplicity,
    /// `derivative_residual(k, s0)` for `k = 0..=multiplicity`.
    pub derivative_residuals: Vec<f64>,
    pub degree: usize,
}

fn certificate(q: &Quasipolynomial, s0: f64, tol: f64) -> Certificate {
    let at = Complex64::new(s0, 0.0);
    let multiplicity = q.multiplicity_at(at, tol);
    Certificate {
        s0,
        multiplicity,
        derivative_residuals: (0..=multiplicity.order)
            .map(|k| q.derivative_residual(k, at))
            .collect(),
        degree: q.degree(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidRetardedOutput {
    #[serde(flatten)]
    pub spec: RetardedSpec,
    pub certificate: Certificate,
}

#[derive(Deserialize)]
struct MidParams {
    s0: Option<f64>,
    tau: Option<f64>,
    n: Option<usize>,
}

fn mid_params(config: &RunConfig) -> Result<MidParams, CliError> {
    let from_file = if config.input_path.is_some() {
        read_input::<MidParams>(config)?
    } else {
        MidParams {
            s0: None,
            tau: None,
            n: None,
        }
    };
    Ok(MidParams {
        s0: config.s0.or(from_file.s0),
        tau: config.tau.or(from_file.tau),
        n: config.n.or(from_file.n),
    })
}

fn check_s0_tau(s0: f64, tau: f64) -> Result<(), CliError> {
    if !s0.is_finite() {
        return Err(CliError::validation(
            "invalid-argument",
            "--s0 must be finite",
        ));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(CliError::validation(
            "invalid-argument",
            format!("--tau must be positive, got {tau}"),
        ));
    }
    Ok(())
}

fn mid_retarded(config: &RunConfig) -> Result<Emitted, CliError> {
    let p = mid_params(config)?;
    let (n, s0, tau) = (
        require(p.n, "--n")?,
        require(p.s0, "--s0")?,
        require(p.tau, "--tau")?,
    );
    check_s0_tau(s0, tau)?;
    let spec = retarded_mid(n, s0, tau)?;
    let q = Quasipolynomial::from_retarded(&spec);
    let certificate = certificate(&q, s0, config.tol.unwrap_or(DEFAULT_MULTIPLICITY_TOL));
    json_only(MidRetardedOutput { spec, certificate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidDdaeOutput {
    #[serde(flatten)]
    pub conditions: MidDdaeConditions,
    /// Representative system with `b = 1`, `c = bc`.
    pub system: DdaeScalar,
    pub certificate: Certificate,
    /// Lattice points `s0 + 2 i xi_k / tau` for `k = -K..=K`, when `--K` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Vec<Complex64>>,
}

fn mid_ddae_cmd(config: &RunConfig) -> Result<Emitted, CliError> {
    let p = mid_params(config)?;
    let (s0, tau) = (require(p.s0, "--s0")?, require(p.tau, "--tau")?);
    check_s0_tau(s0, tau)?;
    let conditions = ddae_mid(s0, tau);
    let system = conditions.system();
    let q = Quasipolynomial::from_ddae_scalar(&system);
    let certificate = certificate(&q, s0, config.tol.unwrap_or(DEFAULT_MULTIPLICITY_TOL));
    let lattice = config.k.map(|k| ddae_root_lattice(s0, tau, k));
    json_only(MidDdaeOutput {
        conditions,
        system,
        certificate,
        lattice,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOutput {
    #[serde(flatten)]
    pub gains: FeedbackGains,
    pub s0: f64,
    pub gain_residuals: [f64; 2],
    pub plant: FeedbackPlant,
}

fn design(config: &RunConfig) -> Result<Emitted, CliError> {
    let plant: FeedbackPlant = read_input(config)?;
    let (gains, s0) = design_gains(&plant)?;
    json_only(DesignOutput {
        gains,
        s0,
        gain_residuals: gain_equation_residuals(&plant, &gains),
        plant,
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LoopInput {
    Designed {
        plant: FeedbackPlant,
        gains: FeedbackGains,
    },
    Plant(FeedbackPlant),
}

fn closed_loop(config: &RunConfig) -> Result<(FeedbackPlant, FeedbackGains), CliError> {
    Ok(match read_input::<LoopInput>(config)? {
        LoopInput::Designed { plant, gains } => (plant, gains),
        LoopInput::Plant(plant) => (plant, design_gains(&plant)?.0),
    })
}

fn verify(config: &RunConfig) -> Result<Emitted, CliError> {
    let (plant, gains) = closed_loop(config)?;
    let s0 = config.s0.unwrap_or_else(|| plant.target_root());
    let report: VerifyReport = match &config.window {
        Some(w) => verify_design_in(&plant, &gains, s0, w)?,
        None => verify_design(&plant, &gains, s0)?,
    };
    json_only(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub decay_rate: Option<f64>,
    pub fit_error: Option<String>,
    pub fit_window: [f64; 2],
    pub max_algebraic_residual: f64,
    pub initial_jump: Vec<f64>,
    pub samples: usize,
    pub gains: FeedbackGains,
}

fn simulate_cmd(config: &RunConfig) -> Result<Emitted, CliError> {
    let (plant, gains) = closed_loop(config)?;
    let sys = MatrixDdae::from_feedback(&plant, &gains);
    let t_end = require(config.t_end, "--T")?;
    let dt = config.dt.unwrap_or(plant.tau / 200.0);
    let traj = simulate(&sys, &History::zero_past(vec![1.0], 2), t_end, dt)?;
    let fit_window = [t_end / 6.0, t_end];
    let (decay_rate, fit_error) = match fit_decay_rate(&traj, fit_window[0], fit_window[1]) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = SimulationSummary {
        decay_rate,
        fit_error,
        fit_window,
        max_algebraic_residual: traj.max_algebraic_residual,
        initial_jump: traj.initial_jump.clone(),
        samples: traj.len(),
        gains,
    };
    Ok(Emitted {
        primary: traj.to_csv(),
        summary: Some(serde_json::to_string(&summary).expect("serializable summary")),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitOutput {
    #[serde(flatten)]
    pub system: DdaeScalar,
    pub reflection: f64,
}

fn circuit(config: &RunConfig) -> Result<Emitted, CliError> {
    let params: CircuitParams = read_input(config)?;
    json_only(CircuitOutput {
        system: circuit_to_ddae(&params),
        reflection: params.reflection(),
    })
}

/// Parses `MID_DELAY_THREADS`; `None` when unset.
pub fn thread_limit(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::validation(
                "invalid-env",
                format!("MID_DELAY_THREADS must be a positive integer, got {v:?}"),
            )),
        },
    }
}
