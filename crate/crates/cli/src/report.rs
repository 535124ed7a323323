//! Named checks and the experiment report.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `value <= tol`.
    AtMost,
    /// `value > tol`.
    Above,
    /// `value < tol`.
    Below,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::AtMost => "<=",
            Comparison::Above => ">",
            Comparison::Below => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    pub comparison: Comparison,
    /// What the computed value is compared against.
    pub oracle: String,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tol: f64, comparison: Comparison, oracle: impl Into<String>) -> Self {
        let pass = match comparison {
            Comparison::AtMost => value <= tol,
            Comparison::Above => value > tol,
            Comparison::Below => value < tol,
        };
        Self { name: name.into(), value, tol, pass, comparison, oracle: oracle.into() }
    }

    pub fn at_most(name: impl Into<String>, value: f64, tol: f64, oracle: impl Into<String>) -> Self {
        Self::new(name, value, tol, Comparison::AtMost, oracle)
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64, oracle: impl Into<String>) -> Self {
        Self::new(name, value, threshold, Comparison::Above, oracle)
    }

    pub fn below(name: impl Into<String>, value: f64, threshold: f64, oracle: impl Into<String>) -> Self {
        Self::new(name, value, threshold, Comparison::Below, oracle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub scenarios: Vec<String>,
    pub seed: u64,
    pub rng: String,
    pub checks: Vec<Check>,
    /// Conjunction of all checks.
    pub pass: bool,
    /// Quantities reported without a pass criterion.
    pub notes: Vec<String>,
    pub files: Vec<String>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            description: None,
            scenarios: Vec::new(),
            seed,
            rng: "SplitMix64".into(),
            checks: Vec::new(),
            pass: true,
            notes: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}
