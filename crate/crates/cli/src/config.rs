//! JSON experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mpflow_core::catalog::{ScenarioKey, ScenarioSpec};
use mpflow_core::flow::FlowOptions;
use mpflow_core::gauge::{GaugeSpec, MapSpec};
use mpflow_core::DerivativeMode;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Integrate a fan of inbound rays to exit and monitor energy.
    Simulate,
    /// Scattering relation over a ray fan.
    Scatter,
    /// Boundary action table.
    Action,
    /// Reparametrization and action identities of the reduced system.
    ReduceCheck,
    /// k-gauge image or counterexample pair versus the original system.
    Gauge,
    /// Composition, identity and inverse laws on random gauges.
    GaugeGroup,
    /// Agreement of the four flow formulations.
    FlowsCompare,
    /// Hamiltonian-curve energy identity and H-tilde time changes.
    TimeChange,
    /// Identities between members of the Hamiltonian family.
    Hamiltonians,
    /// Sampled strict MP-convexity margins, with a dented control domain.
    ConvexityCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Scatter => "scatter",
            ExperimentKind::Action => "action",
            ExperimentKind::ReduceCheck => "reduce-check",
            ExperimentKind::Gauge => "gauge",
            ExperimentKind::GaugeGroup => "gauge-group",
            ExperimentKind::FlowsCompare => "flows-compare",
            ExperimentKind::TimeChange => "time-change",
            ExperimentKind::Hamiltonians => "hamiltonians",
            ExperimentKind::ConvexityCheck => "convexity-check",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Derivatives {
    #[default]
    FiniteDifference,
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub key: String,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub derivatives: Derivatives,
}

impl ScenarioConfig {
    pub fn spec(&self) -> Result<ScenarioSpec> {
        let key: ScenarioKey = self.key.parse()?;
        let mut spec = ScenarioSpec::new(key);
        // dimension first so that other checks see it
        if let Some(dim) = self.params.get("dim") {
            spec.set_param("dim", *dim)?;
        }
        for (name, value) in self.params.iter().filter(|(n, _)| n.as_str() != "dim") {
            spec.set_param(name, *value)?;
        }
        if let Some(k) = self.k {
            spec.set_param("k", k)?;
        }
        Ok(spec)
    }

    pub fn mode(&self) -> DerivativeMode {
        match self.derivatives {
            Derivatives::FiniteDifference => DerivativeMode::default(),
            Derivatives::Analytic => DerivativeMode::Analytic,
        }
    }

    /// `key` followed by the explicit parameters, e.g. `constant-field[field=0.1]`.
    pub fn label(&self) -> String {
        let mut parts: Vec<String> = self.params.iter().map(|(n, v)| format!("{n}={v}")).collect();
        if let Some(k) = self.k {
            parts.insert(0, format!("k={k}"));
        }
        if parts.is_empty() {
            self.key.clone()
        } else {
            format!("{}[{}]", self.key, parts.join(","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// No-exit horizon; defaults to `100 diam(M) / min speed`.
    pub t_max: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-10, t_max: None }
    }
}

impl IntegratorConfig {
    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions { horizon: self.t_max, ..FlowOptions::default().with_tolerances(self.rtol, self.atol) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Inbound rays per scenario.
    pub rays: usize,
    /// Boundary grid size of action tables.
    pub table: usize,
    /// Random boundary pairs checked against closed forms.
    pub pairs: usize,
    /// Random points for pointwise identities.
    pub points: usize,
    /// Interior samples for orderings and relation residuals.
    pub interior: usize,
    /// Boundary samples for restriction checks.
    pub boundary: usize,
    /// Boundary points for convexity margins (two tangent directions each in 2D).
    pub convexity_points: usize,
    /// Random gauge pairs for the group laws.
    pub gauge_pairs: usize,
    /// Time samples per trajectory comparison.
    pub curve_samples: usize,
    /// Dent depth of the concave control domain.
    pub dent_depth: f64,
    /// Amplitude of the potential perturbation in the non-equivalent control.
    pub perturbation: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            rays: 20,
            table: 16,
            pairs: 10,
            points: 100,
            interior: 200,
            boundary: 64,
            convexity_points: 50,
            gauge_pairs: 5,
            curve_samples: 100,
            dent_depth: 0.3,
            perturbation: 0.2,
        }
    }
}

/// A gauge from the catalog: `f` is a spiral flow (`a`, `b`), an RK4 generator
/// flow (`a`, `b`, `shift`, `steps`) or the identity; `φ = ρ (psi0 + psi·x)`;
/// `μ = exp(mu_boundary + ρ (mu0 + mu·x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    #[serde(default = "default_map")]
    pub map: String,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub shift: Vec<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub psi0: f64,
    #[serde(default)]
    pub psi: Vec<f64>,
    #[serde(default)]
    pub mu_boundary: f64,
    #[serde(default)]
    pub mu0: f64,
    #[serde(default)]
    pub mu: Vec<f64>,
}

fn default_map() -> String {
    "identity".into()
}

fn default_steps() -> usize {
    32
}

impl GaugeConfig {
    pub fn spec(&self) -> Result<GaugeSpec> {
        let map = match self.map.as_str() {
            "identity" => MapSpec::Identity,
            "spiral" => MapSpec::Spiral { a: self.a, b: self.b },
            "generator" => MapSpec::Generator { a: self.a, b: self.b, shift: self.shift.clone(), steps: self.steps },
            other => {
                return Err(HarnessError::Invalid(format!(
                    "unknown gauge map `{other}` (expected identity, spiral or generator)"
                )))
            }
        };
        Ok(GaugeSpec {
            map,
            psi0: self.psi0,
            psi: self.psi.clone(),
            mu_boundary: self.mu_boundary,
            mu0: self.mu0,
            mu: self.mu.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    /// Optional free-form description copied into the report.
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub scenarios: Vec<ScenarioConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub gauge: Option<GaugeConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// `scenario` and `scenarios` together, in order.
    pub fn scenario_list(&self) -> Vec<&ScenarioConfig> {
        self.scenario.iter().chain(self.scenarios.iter()).collect()
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.experiment.ok_or_else(|| HarnessError::Invalid("no experiment kind given".into()))
    }

    /// Checks everything that can be checked without running the experiment,
    /// including the standing assumption `k > max U` of each scenario.
    pub fn validate(&self) -> Result<()> {
        let violation = |key: &str, message: String| Err(HarnessError::Constraint { key: key.into(), message });
        let i = &self.integrator;
        for (key, value) in [("integrator.rtol", i.rtol), ("integrator.atol", i.atol)] {
            if !(value > 0.0) {
                return violation(key, format!("must be positive, got {value}"));
            }
        }
        if let Some(t) = i.t_max {
            if !(t > 0.0) {
                return violation("integrator.t_max", format!("must be positive, got {t}"));
            }
        }
        let s = &self.sampling;
        if s.table < 2 {
            return violation("sampling.table", format!("must be at least 2, got {}", s.table));
        }
        if !(s.dent_depth > 0.0) {
            return violation("sampling.dent_depth", format!("must be positive, got {}", s.dent_depth));
        }
        if !(s.perturbation > 0.0) {
            return violation("sampling.perturbation", format!("must be positive, got {}", s.perturbation));
        }
        let scenarios = self.scenario_list();
        if scenarios.is_empty() {
            return Err(HarnessError::Invalid("no scenario given".into()));
        }
        for sc in scenarios {
            let spec = sc.spec()?;
            match spec.dim {
                2 => drop(spec.build_with_mode::<2>(sc.mode())?),
                _ => drop(spec.build_with_mode::<3>(sc.mode())?),
            }
        }
        if let Some(g) = &self.gauge {
            g.spec()?;
        }
        Ok(())
    }
}

fn location(text: &str, line: usize, column: usize) -> (usize, usize) {
    // serde_json reports line 0 for errors without position
    if line == 0 {
        (text.lines().count().max(1), column)
    } else {
        (line, column)
    }
}

/// Parses a JSON config; syntax errors and schema violations carry the line.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| {
        let (line, column) = location(text, e.line(), e.column());
        let message = e.to_string();
        let message = match message.rfind(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        match e.classify() {
            serde_json::error::Category::Data => HarnessError::Schema { path: path.into(), line, column, message },
            _ => HarnessError::Parse { path: path.into(), line, column, message },
        }
    })
}

/// Reads, parses and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
    let config = parse_config(&text, path)?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use mpflow_core::MpError;

    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config(text, Path::new("test.json"))
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(r#"{"experiment": "simulate", "scenario": {"key": "flat-disk"}}"#).unwrap();
        assert_eq!(c.kind().unwrap(), ExperimentKind::Simulate);
        assert_eq!(c.integrator, IntegratorConfig::default());
        assert_eq!(c.sampling.rays, 20);
        c.validate().unwrap();
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse("{\n  \"experiment\": \"simulate\",\n  \"scenario\": {\"key\": }\n}").unwrap_err();
        match err {
            HarnessError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_a_schema_violation_naming_it() {
        let err = parse("{\n  \"experiment\": \"scatter\",\n  \"raysx\": 3\n}").unwrap_err();
        match &err {
            HarnessError::Schema { line, message, .. } => {
                assert_eq!(*line, 3);
                assert!(message.contains("raysx"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_experiment_is_rejected() {
        assert!(matches!(parse(r#"{"experiment": "teleport"}"#), Err(HarnessError::Schema { .. })));
    }

    #[test]
    fn nonpositive_tolerances_name_the_key() {
        for (field, value) in [("rtol", "-1e-10"), ("atol", "0")] {
            let text = format!(
                r#"{{"experiment": "simulate", "scenario": {{"key": "flat-disk"}}, "integrator": {{"{field}": {value}}}}}"#
            );
            match parse(&text).unwrap().validate() {
                Err(HarnessError::Constraint { key, .. }) => assert_eq!(key, format!("integrator.{field}")),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn energy_below_potential_is_rejected() {
        let c = parse(r#"{"experiment": "simulate", "scenario": {"key": "radial-potential", "k": 0.1}}"#).unwrap();
        assert!(matches!(c.validate(), Err(HarnessError::Core(MpError::BelowPotential { .. }))));
    }

    #[test]
    fn unknown_scenario_parameter_is_rejected() {
        let c = parse(r#"{"experiment": "simulate", "scenario": {"key": "flat-disk", "params": {"spin": 1}}}"#).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("spin"));
    }

    #[test]
    fn scenario_list_joins_both_keys() {
        let c = parse(
            r#"{"experiment": "scatter", "scenario": {"key": "flat-disk"},
                "scenarios": [{"key": "constant-field", "params": {"field": 0.1}}]}"#,
        )
        .unwrap();
        let labels: Vec<String> = c.scenario_list().iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["flat-disk", "constant-field[field=0.1]"]);
    }

    #[test]
    fn dimension_is_applied_before_other_parameters() {
        let s = ScenarioConfig {
            key: "flat-disk".into(),
            k: Some(2.0),
            params: [("dim".to_string(), 3.0), ("radius".to_string(), 2.0)].into(),
            derivatives: Derivatives::Analytic,
        };
        let spec = s.spec().unwrap();
        assert_eq!((spec.dim, spec.radius, spec.k), (3, 2.0, 2.0));
        assert_eq!(s.mode(), DerivativeMode::Analytic);
    }

    #[test]
    fn gauge_section_builds() {
        let g: GaugeConfig = serde_json::from_str(r#"{"map": "spiral", "b": 0.6, "mu0": 0.3}"#).unwrap();
        assert!(g.spec().unwrap().preserves_boundary());
        let bad: GaugeConfig = serde_json::from_str(r#"{"map": "warp"}"#).unwrap();
        assert!(bad.spec().is_err());
    }
}
