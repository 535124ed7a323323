//! Experiment drivers. Each returns checks and CSV tables; nothing is written here.

mod boundary;
mod flows;
mod gauge;

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use mpflow_core::catalog::ScenarioSpec;
use mpflow_core::flow::FlowOptions;
use mpflow_core::MpSystem;

use crate::config::{ExperimentConfig, ExperimentKind, ScenarioConfig, SamplingConfig};
use crate::error::{HarnessError, Result};
use crate::output::OutputFile;
use crate::report::{Check, Report};

/// The report and tables of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: Report,
    pub files: Vec<OutputFile>,
}

/// One scenario of a run, with checks and files collected under its label.
pub(crate) struct Run<'a> {
    pub config: &'a ExperimentConfig,
    pub scenario: &'a ScenarioConfig,
    pub spec: ScenarioSpec,
    pub label: String,
    /// Position in the scenario list, used in file names.
    pub index: usize,
    pub rng: SplitMix64,
    checks: Vec<Check>,
    notes: Vec<String>,
    files: Vec<OutputFile>,
}

impl<'a> Run<'a> {
    pub fn opts(&self) -> FlowOptions {
        self.config.integrator.flow_options()
    }

    pub fn sampling(&self) -> &SamplingConfig {
        &self.config.sampling
    }

    pub fn system<const D: usize>(&self) -> Result<MpSystem<D>> {
        Ok(self.spec.build_with_mode::<D>(self.scenario.mode())?)
    }

    pub fn check(&mut self, check: Check) {
        let name = format!("{}/{}", self.label, check.name);
        self.checks.push(Check { name, ..check });
    }

    pub fn note(&mut self, note: impl AsRef<str>) {
        self.notes.push(format!("{}: {}", self.label, note.as_ref()));
    }

    /// Adds a table named `<stem>_<index>.csv` (or `<stem>.csv` for single-scenario runs).
    pub fn file(&mut self, stem: &str, mut table: crate::output::CsvTable) {
        let name = if self.config.scenario_list().len() == 1 {
            format!("{stem}.csv")
        } else {
            format!("{stem}_{}.csv", self.index)
        };
        table.metadata.insert(0, format!("scenario: {}", self.label));
        self.files.push(OutputFile { name, table });
    }

    pub fn require_dim(&self, experiment: ExperimentKind, allowed: &[usize]) -> Result<()> {
        if allowed.contains(&self.spec.dim) {
            Ok(())
        } else {
            Err(HarnessError::UnsupportedDimension { experiment: experiment.name(), dim: self.spec.dim })
        }
    }
}

/// Mixes the scenario index into the seed so that runs are independent.
fn scenario_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Runs the experiment on every configured scenario.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let kind = config.kind()?;
    let mut report = Report::new(kind.name(), config.seed);
    report.description = config.description.clone();
    let mut files = Vec::new();
    for (index, scenario) in config.scenario_list().into_iter().enumerate() {
        let mut run = Run {
            config,
            scenario,
            spec: scenario.spec()?,
            label: scenario.label(),
            index,
            rng: SplitMix64::seed_from_u64(scenario_seed(config.seed, index)),
            checks: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
        };
        match kind {
            ExperimentKind::Simulate => flows::simulate(&mut run)?,
            ExperimentKind::FlowsCompare => flows::flows_compare(&mut run)?,
            ExperimentKind::TimeChange => flows::time_change(&mut run)?,
            ExperimentKind::Hamiltonians => flows::hamiltonians(&mut run)?,
            ExperimentKind::Scatter => boundary::scatter(&mut run)?,
            ExperimentKind::Action => boundary::action(&mut run)?,
            ExperimentKind::ReduceCheck => boundary::reduce_check(&mut run)?,
            ExperimentKind::ConvexityCheck => boundary::convexity(&mut run)?,
            ExperimentKind::Gauge => gauge::gauge(&mut run)?,
            ExperimentKind::GaugeGroup => gauge::gauge_group(&mut run)?,
        }
        report.scenarios.push(run.label.clone());
        for c in run.checks {
            report.push(c);
        }
        report.notes.extend(run.notes);
        files.extend(run.files);
    }
    Ok(ExperimentOutput { report, files })
}

/// Largest value, treating an empty set as zero.
pub(crate) fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) })
}

pub(crate) fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, |m: f64, v| if v.is_nan() || m.is_nan() { f64::NAN } else { m.min(v) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extrema_propagate_nan() {
        assert_eq!(max_of([1.0, 3.0, 2.0]), 3.0);
        assert!(max_of([1.0, f64::NAN]).is_nan());
        assert_eq!(max_of([]), 0.0);
        assert_eq!(min_of([1.0, -3.0]), -3.0);
    }

    #[test]
    fn scenario_seeds_differ() {
        assert_ne!(scenario_seed(1, 0), scenario_seed(1, 1));
        assert_eq!(scenario_seed(5, 0), 5);
    }
}
