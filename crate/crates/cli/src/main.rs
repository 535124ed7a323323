use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;

use mpflow_core::catalog::ScenarioKey;
use mpflow_harness::{load_config, run_experiment, write_outputs, ExperimentKind};

/// Simulate MP-systems and check their boundary data.
#[derive(Debug, Parser)]
#[command(name = "mpflow", version)]
struct Cli {
    /// Experiment to run; may also be given in the config.
    experiment: Option<ExperimentKind>,
    /// JSON experiment config.
    #[arg(long, required_unless_present = "list_scenarios")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized sampling (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Print the scenario catalog and exit.
    #[arg(long)]
    list_scenarios: bool,
}

fn list_scenarios() {
    for key in ScenarioKey::ALL {
        println!("{:<18} {}", key.name(), key.summary());
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if cli.list_scenarios {
        list_scenarios();
        return Ok(true);
    }
    let path = cli.config.expect("clap enforces --config");
    let mut config = load_config(&path)?;
    match (cli.experiment, config.experiment) {
        (Some(a), Some(b)) if a != b => {
            bail!("experiment `{}` conflicts with `{}` in {}", a.name(), b.name(), path.display())
        }
        (Some(a), _) => config.experiment = Some(a),
        (None, Some(_)) => {}
        (None, None) => bail!("no experiment given on the command line or in {}", path.display()),
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("mpflow-out"));
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut output = run_experiment(&config)?;
    write_outputs(&mut output.report, &output.files, &out)?;
    for check in &output.report.checks {
        println!(
            "{} {} = {:e} ({} {:e})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.comparison.symbol(),
            check.tol
        );
    }
    for note in &output.report.notes {
        println!("note: {note}");
    }
    println!("report: {}", out.join("report.json").display());
    Ok(output.report.pass)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
