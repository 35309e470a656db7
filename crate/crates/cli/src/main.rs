use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use uavnet_core::output::plot;
use uavnet_core::{run, ConfigError, MaxUavs, RunFlags, RunReport, SimConfig, SimError};

#[derive(Parser, Debug)]
#[command(name = "uavnet", version, about = "UAV base-station network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the simulation and write its artifacts.
    Simulate(SimulateArgs),
    /// Render a grid CSV as a binary PGM heatmap.
    Plot {
        #[arg(long = "in", value_name = "GRID_CSV")]
        input: PathBuf,
        #[arg(long = "out", value_name = "PGM")]
        output: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct SimulateArgs {
    /// Flat `key = value` config file; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ticks: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// A count (root included) or `unlimited`.
    #[arg(long)]
    max_uavs: Option<MaxUavs>,
    #[arg(long)]
    grid_step: Option<f64>,
    /// Fail the root UAV at the start of this tick.
    #[arg(long)]
    kill_root_at: Option<u64>,
    /// Also write PGM heatmaps next to the SNR grid CSVs.
    #[arg(long)]
    pgm: bool,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

fn load_config(args: &SimulateArgs) -> Result<SimConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(ticks) = args.ticks {
        cfg.ticks = ticks;
    }
    if let Some(cap) = args.max_uavs {
        cfg.max_uavs = cap;
    }
    if let Some(step) = args.grid_step {
        cfg.grid_step = step;
    }
    cfg.validate()
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args).map_err(|e| Failure::Config(e.into()))?;
    let flags = RunFlags {
        kill_root_at: args.kill_root_at,
        out_dir: Some(args.out_dir.clone()),
        write_pgm: args.pgm,
    };
    let report = run(cfg, &flags).map_err(|e| match e {
        SimError::Config(c) => Failure::Config(c.into()),
        other => Failure::Runtime(anyhow::Error::new(other).context("simulation failed")),
    })?;
    summarize(&report, &args.out_dir);
    Ok(())
}

fn summarize(report: &RunReport, dir: &Path) {
    let dropped: uavnet_core::Traffic = report.ticks.iter().map(|m| m.dropped()).sum();
    let offered: uavnet_core::Traffic = report.ticks.iter().map(|m| m.offered).sum();
    let active = report.ticks.last().map_or(0, |m| m.active_uavs);
    println!(
        "{} ticks, offered {offered}, dropped {dropped}, {active} active UAVs at end",
        report.ticks.len()
    );
    for entry in &report.manifest {
        println!("{}  {} bytes", dir.join(&entry.path).display(), entry.bytes);
    }
}

fn plot_cmd(input: &Path, output: &Path) -> Result<(), Failure> {
    let (w, h) = plot(input, output)
        .with_context(|| format!("cannot plot {}", input.display()))
        .map_err(Failure::Runtime)?;
    println!("{} ({w}x{h})", output.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Plot { input, output } => plot_cmd(&input, &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    }
}
