//! Acceptance suite: one preset config per criterion, one PASS/FAIL line each.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use mpflow_harness::{load_config, run_experiment, Report};

/// Wall-clock budget per criterion.
const BUDGET_SECONDS: f64 = 60.0;

const CRITERIA: [(u32, &str, &str); 11] = [
    (1, "energy conservation on the catalog", "c01_energy.json"),
    (2, "four formulations agree", "c02_four_flows.json"),
    (3, "Hamiltonian-curve energy and time changes", "c03_time_change.json"),
    (4, "Hamiltonian identities and level sets", "c04_hamiltonians.json"),
    (5, "reduction: unit speed and equal action tables", "c05_reduction.json"),
    (6, "flat action equals the chord formula", "c06_flat_action.json"),
    (7, "constant-field scattering matches Larmor arcs", "c07_larmor.json"),
    (8, "gauge group laws", "c08_gauge_group.json"),
    (9, "gauge-equivalent boundary data, perturbed control flagged", "c09_gauge.json"),
    (10, "counterexample pair", "c10_counterexample.json"),
    (11, "boundary convexity and dented control", "c11_convexity.json"),
];

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(file: &str) -> Result<Report, String> {
    let config = load_config(&config_dir().join(file)).map_err(|e| e.to_string())?;
    run_experiment(&config).map(|o| o.report).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let mut all = true;
    for (id, title, file) in CRITERIA {
        let start = Instant::now();
        let outcome = run(file);
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match &outcome {
            Ok(report) => {
                let failed: Vec<String> = report
                    .failed()
                    .map(|c| format!("{} = {:e} ({} {:e})", c.name, c.value, c.comparison.symbol(), c.tol))
                    .collect();
                let within = secs < BUDGET_SECONDS;
                let detail = if failed.is_empty() {
                    format!("{} checks", report.checks.len())
                } else {
                    failed.join("; ")
                };
                (report.pass && within, detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!(
            "{} criterion {id}: {title} [{file}, {secs:.1}s] {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
