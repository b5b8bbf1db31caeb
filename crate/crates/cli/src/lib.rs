//! Command-line front end: argument grammar, layered settings and the
//! subcommand implementations.

pub mod args;
pub mod commands;
pub mod config;
pub mod exit;
pub mod gnuplot;

use anyhow::Context as _;

use args::{Cli, Command, SweepPart};
use commands::Context;
use config::Settings;

/// Resolves settings for the parsed command line and runs the subcommand.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.common.config {
        Some(p) => Some(Settings::from_file(p).map_err(|e| exit::usage(format!("{e:#}")))?),
        None => None,
    };
    let (preset, local) = match &cli.command {
        Command::FixedPoints => (Settings::default(), Settings::default()),
        Command::Thresholds(a) => (Settings::default(), Settings { points: a.points, ..Settings::default() }),
        Command::StabilityScan(a) => (Settings::default(), a.settings()),
        Command::Evolve(a) => (a.preset.map(commands::evolve_preset).unwrap_or_default(), a.settings()),
        Command::Sweep(a) => (a.preset.map(|p| commands::sweep_preset(p).0).unwrap_or_default(), a.settings()),
        Command::Quantum(a) => (
            commands::quantum_base().overlay(&a.preset.map(commands::quantum_preset).unwrap_or_default()),
            a.settings(),
        ),
    };
    let flags = cli.common.settings().overlay(&local);
    let settings = Settings::resolve(preset, file, &flags);
    if let Some(jobs) = settings.jobs {
        if jobs == 0 {
            return Err(exit::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("cannot size the worker pool")?;
    }
    log::debug!("resolved settings: {settings:?}");
    let ctx = Context::new(settings);
    match &cli.command {
        Command::FixedPoints => commands::cmd_fixed_points(&ctx),
        Command::Thresholds(a) => commands::cmd_thresholds(&ctx, a.boundary),
        Command::StabilityScan(a) => commands::cmd_stability_scan(&ctx, a.refine),
        Command::Evolve(a) => {
            let title = match a.preset {
                Some(p) => format!("{p:?}"),
                None => "trajectory".into(),
            };
            commands::cmd_evolve(&ctx, &title)
        }
        Command::Sweep(a) => {
            let part = a.part.or(a.preset.map(|p| commands::sweep_preset(p).1)).unwrap_or(SweepPart::All);
            commands::cmd_sweep(&ctx, part)
        }
        Command::Quantum(a) => commands::cmd_quantum(&ctx, a.dimension_only),
    }
}
