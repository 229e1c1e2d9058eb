use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use giant_swing::scenario::{self, CliError, CliResult, ScenarioConfig};

#[derive(Parser)]
#[command(name = "giant-swing", version, about = "Acrobot energy injection, dissipation and regulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel commands.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Constrained or closed-loop run with energy verdict.
    Simulate(Common),
    /// Time to first rotation from random initial conditions.
    Montecarlo(Common),
    /// Supervised run between injection, dissipation and extension.
    Regulate(Common),
    /// Gain integrals and return maps over a radius grid.
    VerifyTheorems(Common),
    /// Nominal-energy constants of the model.
    Energy(Common),
}

fn load(common: &Common) -> CliResult<(ScenarioConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    let out = common.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok((cfg, out))
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Simulate(c) => {
            let (cfg, out) = load(&c)?;
            let art = scenario::cmd_simulate(&cfg)?;
            art.write(&out)?;
            Ok(serde_json::to_string_pretty(&art.summary)?)
        }
        Command::Regulate(c) => {
            let (cfg, out) = load(&c)?;
            let art = scenario::cmd_regulate(&cfg)?;
            art.write(&out)?;
            Ok(serde_json::to_string_pretty(&art.summary)?)
        }
        Command::Montecarlo(c) => {
            let (cfg, out) = load(&c)?;
            let art = scenario::cmd_montecarlo(&cfg)?;
            art.write(&out)?;
            Ok(serde_json::to_string_pretty(&art.summary)?)
        }
        Command::VerifyTheorems(c) => {
            let (cfg, out) = load(&c)?;
            let art = scenario::cmd_verify(&cfg)?;
            art.write(&out)?;
            Ok(serde_json::to_string_pretty(&art.summary)?)
        }
        Command::Energy(c) => {
            let (cfg, out) = load(&c)?;
            let report = scenario::cmd_energy(&cfg)?;
            report.write(&out)?;
            Ok(serde_json::to_string_pretty(&report)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("giant-swing: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
