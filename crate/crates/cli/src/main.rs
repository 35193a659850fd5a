//! `darksource`: spectra, protocol dynamics, photon correlations and
//! dark-state checks. Every run writes CSV/JSON data plus a manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use darksource::correlations::Channel;
use darksource::models::{ModelKind, ProtocolConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("tolerance violated: {0}")]
    Tolerance(String),
    #[error(transparent)]
    Core(#[from] darksource::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use darksource::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Tolerance(_) => 4,
            CliError::Core(E::InvalidArgument(_) | E::Precondition(_) | E::Schedule(_)) => 2,
            CliError::Core(E::Convergence(_) | E::Integration { .. }) => 3,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "darksource", version, about = "Dark-state single-photon source simulations")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Protocol configuration (TOML, or JSON by extension). Defaults reproduce the reference parameter set.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Photon-number cutoff (overrides the config).
    #[arg(long, global = true)]
    pub fock: Option<usize>,
    /// Numerical tolerance: integrator rtol for dynamics, level/residual tolerance for spectra and dark-state checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parity-resolved spectrum sweep with dark-level tracking.
    Spectrum(SpectrumArgs),
    /// Periodic emission protocol: trajectory, fluxes, waveform fits, efficiencies.
    Protocol(ProtocolArgs),
    /// Two-time photon correlations via the quantum regression theorem.
    Correlate(CorrelateArgs),
    /// Closed-form dark-state residuals and one-photon ansatz scans.
    Darkstate(DarkstateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Rabi,
    Jc,
    RabiStark,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Rabi => ModelKind::Rabi,
            ModelArg::Jc => ModelKind::Jc,
            ModelArg::RabiStark => ModelKind::RabiStark,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    /// First adiabatic ramp of the Rabi protocol.
    Rabi,
    /// Fast ramp of the Rabi-Stark protocol.
    Stark,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value = "rabi")]
    pub model: ModelArg,
    /// Sweep the instantaneous parameters of a protocol ramp instead of g.
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    #[arg(long, default_value_t = 0.0)]
    pub g_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub g_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Δ1 (Δ2 = ω − Δ1). Defaults to the protocol start.
    #[arg(long)]
    pub delta1: Option<f64>,
    /// U1 = U2 for the Rabi-Stark model. Defaults to the config value.
    #[arg(long)]
    pub u: Option<f64>,
    /// Skip the doubled-cutoff convergence check.
    #[arg(long)]
    pub no_convergence_check: bool,
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    #[arg(long, default_value_t = 1)]
    pub periods: usize,
    /// Use the Rabi-Stark fast transfer and also report the isolated transfer.
    #[arg(long)]
    pub stark: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Hbt,
    Hom,
    Indist,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Both,
    First,
    Second,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Both => Channel::Both,
            ChannelArg::First => Channel::First,
            ChannelArg::Second => Channel::Second,
        }
    }
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[arg(long, value_enum, default_value = "hbt")]
    pub experiment: Experiment,
    #[arg(long, value_enum, default_value = "both")]
    pub channel: ChannelArg,
    /// Simulated periods (the delay axis spans 1.5 periods).
    #[arg(long, default_value_t = 3)]
    pub periods: usize,
    /// t and τ grid step (defaults to the config value).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub stark: bool,
}

#[derive(Args, Debug)]
pub struct DarkstateArgs {
    /// Residual ‖(H − E)ψ‖ at random manifold points.
    #[arg(long)]
    pub check_manifold: bool,
    /// Solve the one-photon ansatz on and off the manifold over a (detuning, g) grid.
    #[arg(long)]
    pub ansatz_scan: bool,
    /// Random points for the manifold check, or grid points per axis for the scan.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Shift of Δ1 + Δ2 away from ω for the off-manifold scan.
    #[arg(long, default_value_t = 0.1)]
    pub offset: f64,
    /// U1 = U2 used by the Rabi-Stark part of the scan.
    #[arg(long, default_value_t = 0.5)]
    pub u: f64,
}

/// Config file plus global overrides.
pub fn effective_config(global: &Global) -> Result<ProtocolConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => ProtocolConfig::load(path)?,
        None => ProtocolConfig::default(),
    };
    if let Some(n) = global.fock {
        cfg.fock_cutoff = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let command: Vec<String> = std::env::args().skip(1).collect();
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(&cli.global, a, command),
        Command::Protocol(a) => commands::protocol(&cli.global, a, command),
        Command::Correlate(a) => commands::correlate(&cli.global, a, command),
        Command::Darkstate(a) => commands::darkstate(&cli.global, a, command),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
