use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mirrorlab_cli::{run, validate, Experiment, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "mirrorlab", version, about = "Coupling experiments for Brownian and subordinated Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival curve of the coupling time against the total variation curve.
    CoupleTime(RunArgs),
    /// Analytic TV, empirical mismatch and empirical survival at one time.
    TvIdentity(RunArgs),
    /// Markovian maximality check TV(t+s) = E TV(s) after time t.
    Characterization(RunArgs),
    /// Finite-difference generators against their analytic form.
    Generator(RunArgs),
    /// Small-time Lévy measure estimates against quadrature.
    Levy(RunArgs),
    /// Second differences of TV against distance.
    Concavity(RunArgs),
    /// Print configuration diagnostics without running anything.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file overlaid on the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(kind: Option<Experiment>, args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match (&args.config, kind) {
        (Some(path), _) => ExperimentConfig::load(path, kind)?,
        (None, Some(k)) => ExperimentConfig::defaults(k),
        (None, None) => return Err(HarnessError::Config(vec!["validate needs --config PATH".into()])),
    };
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.replicas {
        config.replicas = v;
    }
    if let Some(v) = &args.out {
        config.out = v.clone();
    }
    if let Some(v) = args.threads {
        config.threads = v;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    let (kind, args) = match &cli.command {
        Command::CoupleTime(a) => (Some(Experiment::CoupleTime), a),
        Command::TvIdentity(a) => (Some(Experiment::TvIdentity), a),
        Command::Characterization(a) => (Some(Experiment::Characterization), a),
        Command::Generator(a) => (Some(Experiment::Generator), a),
        Command::Levy(a) => (Some(Experiment::Levy), a),
        Command::Concavity(a) => (Some(Experiment::Concavity), a),
        Command::Validate(a) => (None, a),
    };
    let config = load(kind, args)?;
    if kind.is_none() {
        let diagnostics = validate(&config);
        for d in &diagnostics {
            println!("{d}");
        }
        if diagnostics.is_empty() {
            println!("ok: {} config is runnable", config.experiment);
            return Ok(true);
        }
        return Err(HarnessError::Config(diagnostics));
    }
    let report = run(&config)?;
    for c in &report.manifest.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!(
        "{} in {:.2}s, results in {}",
        config.experiment,
        report.manifest.wall_time_seconds,
        report.out.display()
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
