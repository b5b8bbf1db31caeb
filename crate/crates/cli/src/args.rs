//! Command-line grammar.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use crate::config::Settings;

#[derive(Debug, Parser)]
#[command(name = "nsdicke", version, about = "Fixed points, stability, dynamics and quantum evolution of the two-ensemble Dicke model")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat TOML file of `key = value` settings (flags take precedence)
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory receiving all output files
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<String>,
    /// Omit timestamps so repeated runs write identical files
    #[arg(long, global = true)]
    pub reproducible: bool,
    /// Worker threads for parallel sections
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// More log output (repeatable)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega_c: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega_a: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Size of ensemble 1
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub n1: Option<f64>,
    /// Size of ensemble 2 relative to ensemble 1
    #[arg(long, global = true, allow_negative_numbers = true, conflicts_with = "n2")]
    pub n2_ratio: Option<f64>,
    /// Absolute size of ensemble 2
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub n2: Option<f64>,
}

impl CommonArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            omega_c: self.omega_c,
            omega_a: self.omega_a,
            kappa: self.kappa,
            lambda: self.lambda,
            n1: self.n1,
            n2_ratio: self.n2_ratio,
            n2: self.n2,
            out_dir: self.out_dir.clone(),
            reproducible: self.reproducible.then_some(true),
            jobs: self.jobs,
            ..Settings::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report every existing fixed point with its stability verdict and spectrum
    FixedPoints,
    /// Superradiant thresholds, optionally as boundary curves over N2/N1
    Thresholds(ThresholdArgs),
    /// Stability of all eight branches along a coupling grid
    StabilityScan(ScanArgs),
    /// Integrate the mean-field equations and classify the attractor
    Evolve(EvolveArgs),
    /// Phase diagram, line cut and steady-state surfaces
    Sweep(SweepArgs),
    /// Master-equation evolution with Husimi Q readout
    Quantum(QuantumArgs),
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Write the threshold curves over N2/N1 in [0, 1]
    #[arg(long)]
    pub boundary: bool,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Bisect every sign change of a leading growth rate
    #[arg(long)]
    pub refine: bool,
}

impl ScanArgs {
    pub fn settings(&self) -> Settings {
        Settings { lambda_min: self.lambda_min, lambda_max: self.lambda_max, points: self.points, ..Settings::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvolvePreset {
    /// Spins along (1,1,0)/√2 and (1,0,−1)/√2 at λ = 2
    #[value(name = "fig3")]
    Fig3,
    /// Both spins down at λ = 2
    #[value(name = "figS3a")]
    FigS3a,
    /// Spin 1 up, spin 2 down at λ = 2
    #[value(name = "figS3c")]
    FigS3c,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long, value_enum)]
    pub preset: Option<EvolvePreset>,
    /// Start from this fixed point (e.g. -zFo-N) plus the field seed
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["init_s1", "init_s2"])]
    pub from: Option<String>,
    /// Initial spin-1 direction x,y,z (normalized to N1/2)
    #[arg(long, value_name = "X,Y,Z", value_parser = floats::<3>, allow_hyphen_values = true)]
    pub init_s1: Option<[f64; 3]>,
    #[arg(long, value_name = "X,Y,Z", value_parser = floats::<3>, allow_hyphen_values = true)]
    pub init_s2: Option<[f64; 3]>,
    /// Initial field re,im before the seed is added
    #[arg(long, value_name = "RE,IM", value_parser = floats::<2>, allow_hyphen_values = true)]
    pub init_a: Option<[f64; 2]>,
    /// Apply the parity map to the initial state
    #[arg(long)]
    pub parity_flip: bool,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub sample_dt: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub seed_magnitude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub seed_phase: Option<f64>,
}

fn floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s.split(',').map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    v.try_into().map_err(|_| format!("expected {N} comma-separated numbers"))
}

impl EvolveArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            t_final: self.t_final,
            sample_dt: self.sample_dt,
            rtol: self.rtol,
            atol: self.atol,
            seed_magnitude: self.seed_magnitude,
            seed_phase: self.seed_phase,
            init_s1: self.init_s1,
            init_s2: self.init_s2,
            init_a: self.init_a,
            from: self.from.clone(),
            parity_flip: self.parity_flip.then_some(true),
            ..Settings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepPart {
    /// Phase diagram over (N2/N1, λ/κ)
    Phase,
    /// Observables of every branch along λ at fixed N2/N1
    LineCut,
    /// Per-branch steady-state surfaces over (N2/N1, λ/κ)
    Surfaces,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepPreset {
    #[value(name = "fig1")]
    Fig1,
    #[value(name = "fig2")]
    Fig2,
    #[value(name = "figS2")]
    FigS2,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub preset: Option<SweepPreset>,
    #[arg(long, value_enum)]
    pub part: Option<SweepPart>,
    #[arg(long)]
    pub ratio_points: Option<usize>,
    #[arg(long)]
    pub lambda_points: Option<usize>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Samples along the line cut
    #[arg(long)]
    pub points: Option<usize>,
}

impl SweepArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            ratio_points: self.ratio_points,
            lambda_points: self.lambda_points,
            lambda_max: self.lambda_max,
            points: self.points,
            ..Settings::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantumPreset {
    /// N1 = 4, N2 = 3, λ = 1.01 from the tilted spin-coherent state
    #[value(name = "fig4")]
    Fig4,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[arg(long, value_enum)]
    pub preset: Option<QuantumPreset>,
    /// Initial state: down, up, fock<N>, coherent:RE,IM, css:T1,P1,T2,P2 or tilted
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub sample_interval: Option<f64>,
    /// Points per axis of the Q-function grid
    #[arg(long)]
    pub q_points: Option<usize>,
    /// Lobe threshold as a fraction of max Q
    #[arg(long)]
    pub lobe_threshold: Option<f64>,
    /// Report the Hilbert-space dimension and exit
    #[arg(long)]
    pub dimension_only: bool,
}

impl QuantumArgs {
    pub fn settings(&self) -> Settings {
        Settings {
            init: self.init.clone(),
            n_max: self.n_max,
            dt: self.dt,
            t_final: self.t_final,
            sample_interval: self.sample_interval,
            q_points: self.q_points,
            lobe_threshold: self.lobe_threshold,
            ..Settings::default()
        }
    }
}
