//! Scenario catalog: closed-form field models on disks and a parameterized
//! scenario description that builds [`MpSystem`]s.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{MpError, Result};
use crate::gauge::{counterexample_pair, CounterexampleParams, GaugeTransform, COUNTEREXAMPLE_K};
use crate::geometry::{ChartDomain, DerivativeMode, FieldModel, Mat, Point, ScenarioFields};
use crate::systems::MpSystem;

/// `g = e^{2λ} δ` with `λ = a(1 - |x|²)`, `α = (B/2)(-x_2 dx_1 + x_1 dx_2)`
/// and `U = u0 (1 - |x|²) + A exp(-|x|²/w²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskModel {
    pub conformal: f64,
    pub field: f64,
    pub quadratic_potential: f64,
    pub gaussian_amplitude: f64,
    pub gaussian_width: f64,
}

impl Default for DiskModel {
    fn default() -> Self {
        Self {
            conformal: 0.0,
            field: 0.0,
            quadratic_potential: 0.0,
            gaussian_amplitude: 0.0,
            gaussian_width: 0.5,
        }
    }
}

impl DiskModel {
    pub fn flat() -> Self {
        Self::default()
    }

    fn conformal_factor<const D: usize>(&self, x: &Point<D>) -> f64 {
        (2.0 * self.conformal * (1.0 - x.norm_squared())).exp()
    }

    fn gaussian<const D: usize>(&self, x: &Point<D>) -> f64 {
        if self.gaussian_amplitude == 0.0 {
            return 0.0;
        }
        let w2 = self.gaussian_width * self.gaussian_width;
        self.gaussian_amplitude * (-x.norm_squared() / w2).exp()
    }
}

impl<const D: usize> FieldModel<D> for DiskModel {
    fn metric(&self, x: &Point<D>) -> Mat<D> {
        Mat::<D>::identity() * self.conformal_factor(x)
    }

    fn one_form(&self, x: &Point<D>) -> Point<D> {
        let mut a = Point::<D>::zeros();
        a[0] = -0.5 * self.field * x[1];
        a[1] = 0.5 * self.field * x[0];
        a
    }

    fn potential(&self, x: &Point<D>) -> f64 {
        self.quadratic_potential * (1.0 - x.norm_squared()) + self.gaussian(x)
    }

    fn metric_partials(&self, x: &Point<D>) -> Option<[Mat<D>; D]> {
        let e = self.conformal_factor(x);
        Some(std::array::from_fn(|k| Mat::<D>::identity() * (-4.0 * self.conformal * x[k] * e)))
    }

    fn one_form_partials(&self, _x: &Point<D>) -> Option<Mat<D>> {
        let mut d = Mat::<D>::zeros();
        d[(1, 0)] = -0.5 * self.field;
        d[(0, 1)] = 0.5 * self.field;
        Some(d)
    }

    fn potential_gradient(&self, x: &Point<D>) -> Option<Point<D>> {
        let w2 = self.gaussian_width * self.gaussian_width;
        Some(x * (-2.0 * self.quadratic_potential) - x * (2.0 * self.gaussian(x) / w2))
    }
}

/// Catalog keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKey {
    FlatDisk,
    ConformalDisk,
    ConstantField,
    RadialPotential,
    Counterexample,
}

impl ScenarioKey {
    pub const ALL: [ScenarioKey; 5] = [
        ScenarioKey::FlatDisk,
        ScenarioKey::ConformalDisk,
        ScenarioKey::ConstantField,
        ScenarioKey::RadialPotential,
        ScenarioKey::Counterexample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKey::FlatDisk => "flat-disk",
            ScenarioKey::ConformalDisk => "conformal-disk",
            ScenarioKey::ConstantField => "constant-field",
            ScenarioKey::RadialPotential => "radial-potential",
            ScenarioKey::Counterexample => "counterexample",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ScenarioKey::FlatDisk => "Euclidean disk, no field, no potential (k = 1/2)",
            ScenarioKey::ConformalDisk => "g = exp(2a(1-|x|^2)) delta on the disk (a = 0.1, k = 1/2)",
            ScenarioKey::ConstantField => "flat disk with constant magnetic field B = 0.5 (k = 1/2)",
            ScenarioKey::RadialPotential => "flat disk with U = u0 (1-|x|^2), u0 = 0.2 (k = 1)",
            ScenarioKey::Counterexample => {
                "(g/(2(3-p)), alpha, p) with p = phi (variant 1) or 2 psi (variant 2), k = 3"
            }
        }
    }
}

impl fmt::Display for ScenarioKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKey {
    type Err = MpError;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKey::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| MpError::Config(format!("unknown scenario key `{s}`")))
    }
}

/// A catalog entry together with its numeric parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub key: ScenarioKey,
    pub dim: usize,
    pub radius: f64,
    pub k: f64,
    pub model: DiskModel,
    pub dent_depth: f64,
    pub dent_width: f64,
    pub counterexample: CounterexampleParams,
    pub variant: u8,
}

/// Parameter names accepted by [`ScenarioSpec::set_param`].
pub const SCENARIO_PARAMS: [&str; 13] = [
    "dim",
    "radius",
    "k",
    "conformal",
    "field",
    "u0",
    "gauss_amp",
    "gauss_width",
    "dent_depth",
    "dent_width",
    "c1",
    "c2",
    "variant",
];

impl ScenarioSpec {
    pub fn new(key: ScenarioKey) -> Self {
        let mut spec = Self {
            key,
            dim: 2,
            radius: 1.0,
            k: 0.5,
            model: DiskModel::flat(),
            dent_depth: 0.0,
            dent_width: 0.3,
            counterexample: CounterexampleParams::default(),
            variant: 1,
        };
        match key {
            ScenarioKey::FlatDisk => {}
            ScenarioKey::ConformalDisk => spec.model.conformal = 0.1,
            ScenarioKey::ConstantField => spec.model.field = 0.5,
            ScenarioKey::RadialPotential => {
                spec.model.quadratic_potential = 0.2;
                spec.k = 1.0;
            }
            ScenarioKey::Counterexample => {
                spec.model.field = 0.3;
                spec.k = 3.0;
            }
        }
        spec
    }

    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let positive = |v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(MpError::Config(format!("parameter `{name}` must be positive, got {v}")))
            }
        };
        match name {
            "dim" => {
                if value != 2.0 && value != 3.0 {
                    return Err(MpError::Config(format!("dim must be 2 or 3, got {value}")));
                }
                self.dim = value as usize;
            }
            "radius" => self.radius = positive(value)?,
            "k" => self.k = value,
            "conformal" => self.model.conformal = value,
            "field" => self.model.field = value,
            "u0" => self.model.quadratic_potential = value,
            "gauss_amp" => self.model.gaussian_amplitude = value,
            "gauss_width" => self.model.gaussian_width = positive(value)?,
            "dent_depth" => {
                if value < 0.0 {
                    return Err(MpError::Config("dent_depth must be non-negative".into()));
                }
                self.dent_depth = value
            }
            "dent_width" => self.dent_width = positive(value)?,
            "c1" => self.counterexample.c1 = value,
            "c2" => self.counterexample.c2 = value,
            "variant" => {
                if value != 1.0 && value != 2.0 {
                    return Err(MpError::Config(format!("variant must be 1 or 2, got {value}")));
                }
                self.variant = value as u8;
            }
            other => {
                return Err(MpError::Config(format!(
                    "unknown parameter `{other}` for scenario `{}`",
                    self.key
                )))
            }
        }
        Ok(())
    }

    /// True when the domain is a round ball (no dent).
    pub fn is_round(&self) -> bool {
        self.dent_depth == 0.0
    }

    /// Flat metric, no potential: the Larmor-arc / chord closed forms apply.
    pub fn is_flat_magnetic(&self) -> bool {
        self.key != ScenarioKey::Counterexample
            && self.model.conformal == 0.0
            && self.model.quadratic_potential == 0.0
            && self.model.gaussian_amplitude == 0.0
    }

    pub fn domain<const D: usize>(&self) -> Result<ChartDomain<D>> {
        if self.is_round() {
            ChartDomain::ball(self.radius)
        } else {
            ChartDomain::dented_ball(self.radius, self.dent_depth, self.dent_width)
        }
    }

    pub fn build<const D: usize>(&self) -> Result<MpSystem<D>> {
        self.build_with_mode(DerivativeMode::default())
    }

    pub fn build_with_mode<const D: usize>(&self, mode: DerivativeMode) -> Result<MpSystem<D>> {
        if D != self.dim {
            return Err(MpError::Config(format!(
                "scenario `{}` has dim {} but was built in dimension {D}",
                self.key, self.dim
            )));
        }
        if self.key == ScenarioKey::Counterexample {
            let (one, two, _) = self.counterexample_pair_with_mode(mode)?;
            return Ok(if self.variant == 1 { one } else { two });
        }
        let domain = self.domain::<D>()?;
        let fields = ScenarioFields::new(Arc::new(self.model)).with_mode(mode);
        MpSystem::new(domain, fields, self.k)
    }

    /// Both counterexample variants and the gauge relating them.
    pub fn counterexample_pair<const D: usize>(&self) -> Result<(MpSystem<D>, MpSystem<D>, GaugeTransform<D>)> {
        self.counterexample_pair_with_mode(DerivativeMode::default())
    }

    pub fn counterexample_pair_with_mode<const D: usize>(
        &self,
        mode: DerivativeMode,
    ) -> Result<(MpSystem<D>, MpSystem<D>, GaugeTransform<D>)> {
        if self.key != ScenarioKey::Counterexample {
            return Err(MpError::Config(format!("scenario `{}` is not the counterexample family", self.key)));
        }
        if self.k != COUNTEREXAMPLE_K {
            return Err(MpError::Config("the counterexample family lives at k = 3".into()));
        }
        let base = DiskModel { quadratic_potential: 0.0, gaussian_amplitude: 0.0, ..self.model };
        counterexample_pair(Arc::new(base), self.domain::<D>()?, self.counterexample, mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_roundtrip() {
        for key in ScenarioKey::ALL {
            assert_eq!(key.name().parse::<ScenarioKey>().unwrap(), key);
        }
        assert!("warp-drive".parse::<ScenarioKey>().is_err());
    }

    #[test]
    fn every_default_scenario_builds() {
        for key in ScenarioKey::ALL {
            let sys = ScenarioSpec::new(key).build::<2>().unwrap();
            assert!(sys.k > sys.max_potential());
        }
    }

    #[test]
    fn below_potential_is_rejected() {
        let mut spec = ScenarioSpec::new(ScenarioKey::RadialPotential);
        spec.set_param("k", 0.1).unwrap();
        assert!(matches!(spec.build::<2>(), Err(MpError::BelowPotential { .. })));
    }

    #[test]
    fn unknown_and_invalid_params() {
        let mut spec = ScenarioSpec::new(ScenarioKey::FlatDisk);
        assert!(spec.set_param("warp", 1.0).is_err());
        assert!(spec.set_param("radius", -1.0).is_err());
        assert!(spec.set_param("dim", 4.0).is_err());
        spec.set_param("dim", 3.0).unwrap();
        assert!(spec.build::<2>().is_err());
        assert!(spec.build::<3>().is_ok());
    }

    #[test]
    fn counterexample_pair_needs_its_energy_level() {
        let mut spec = ScenarioSpec::new(ScenarioKey::Counterexample);
        assert!(spec.counterexample_pair::<2>().is_ok());
        spec.set_param("k", 4.0).unwrap();
        assert!(spec.counterexample_pair::<2>().is_err());
        assert!(ScenarioSpec::new(ScenarioKey::FlatDisk).counterexample_pair::<2>().is_err());
    }

    #[test]
    fn dented_disk_loses_convexity() {
        let mut spec = ScenarioSpec::new(ScenarioKey::FlatDisk);
        spec.set_param("dent_depth", 0.3).unwrap();
        let sys = spec.build::<2>().unwrap();
        let samples = crate::systems::sample_convexity_margins(&sys, 100, 2).unwrap();
        assert!(samples.iter().any(|s| s.margin < 0.0));
    }
}
