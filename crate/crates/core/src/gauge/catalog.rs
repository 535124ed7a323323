use std::sync::Arc;

use crate::error::{MpError, Result};
use crate::geometry::{ChartDomain, Mat, Point, ScalarField};

use super::maps::{AffineField, BoundaryFixingMap, GeneratorFlow, Identity, SpiralFlow};
use super::scalars::{AffineScalar, BoundaryVanishing, ExpFactor};
use super::GaugeTransform;

/// Boundary-fixing diffeomorphism families.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSpec {
    Identity,
    /// Closed-form flow of `ρ (a x + b ρ J x)` on a ball.
    Spiral { a: f64, b: f64 },
    /// RK4 time-one map of `ρ (A x + c)` with `A = a I + b J`.
    Generator { a: f64, b: f64, shift: Vec<f64>, steps: usize },
}

/// A gauge from the catalog:
///
/// * `f` from [`MapSpec`],
/// * `φ = ρ (psi0 + psi·x)`,
/// * `μ = exp(mu_boundary + ρ (mu0 + mu·x))`.
///
/// The gauge preserves boundary data when `f` has identity Jacobian on `∂M`
/// (spiral with `a = 0`) and `mu_boundary = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSpec {
    pub map: MapSpec,
    pub psi0: f64,
    pub psi: Vec<f64>,
    pub mu_boundary: f64,
    pub mu0: f64,
    pub mu: Vec<f64>,
}

impl Default for GaugeSpec {
    fn default() -> Self {
        Self { map: MapSpec::Identity, psi0: 0.0, psi: vec![], mu_boundary: 0.0, mu0: 0.0, mu: vec![] }
    }
}

fn vector<const D: usize>(values: &[f64], name: &str) -> Result<Point<D>> {
    if values.is_empty() {
        return Ok(Point::<D>::zeros());
    }
    if values.len() < D || values[D..].iter().any(|v| *v != 0.0) {
        return Err(MpError::Config(format!("`{name}` needs {D} components, got {values:?}")));
    }
    Ok(Point::<D>::from_column_slice(&values[..D]))
}

impl GaugeSpec {
    /// Whether the gauge leaves `g`, `U` and `i*α` unchanged on `∂M`.
    pub fn preserves_boundary(&self) -> bool {
        let map_ok = match &self.map {
            MapSpec::Identity => true,
            MapSpec::Spiral { a, .. } => *a == 0.0,
            MapSpec::Generator { .. } => false,
        };
        map_ok && self.mu_boundary == 0.0
    }

    pub fn build_map<const D: usize>(&self, domain: &ChartDomain<D>) -> Result<Arc<dyn BoundaryFixingMap<D>>> {
        Ok(match &self.map {
            MapSpec::Identity => Arc::new(Identity),
            MapSpec::Spiral { a, b } => {
                if (domain.rho(&Point::<D>::zeros()) - 0.25 * domain.diameter().powi(2)).abs() > 1e-12 {
                    return Err(MpError::Config("spiral gauges need a round ball centered at 0".into()));
                }
                Arc::new(SpiralFlow::new(*a, *b, 0.5 * domain.diameter()))
            }
            MapSpec::Generator { a, b, shift, steps } => {
                let mut matrix = Mat::<D>::identity() * *a;
                matrix[(0, 1)] -= b;
                matrix[(1, 0)] += b;
                let field = AffineField { matrix, shift: vector::<D>(shift, "shift")? };
                Arc::new(GeneratorFlow::new(domain.clone(), field, (*steps).max(1)))
            }
        })
    }

    pub fn build<const D: usize>(&self, domain: &ChartDomain<D>, k: f64) -> Result<GaugeTransform<D>> {
        let f = self.build_map(domain)?;
        let psi = AffineScalar { constant: self.psi0, linear: vector::<D>(&self.psi, "psi")? };
        let phi: Arc<dyn ScalarField<D>> =
            Arc::new(BoundaryVanishing { domain: domain.clone(), psi: Arc::new(psi) });
        let mu: Arc<dyn ScalarField<D>> = Arc::new(ExpFactor {
            domain: domain.clone(),
            constant: self.mu_boundary,
            interior: self.mu0,
            linear: vector::<D>(&self.mu, "mu")?,
        });
        GaugeTransform::new(f, phi, mu, k, domain)
    }

    /// Sets one numeric parameter by name.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let set_index = |v: &mut Vec<f64>, i: usize| {
            if v.len() < 3 {
                v.resize(3, 0.0);
            }
            v[i] = value;
        };
        match name {
            "a" | "b" => match &mut self.map {
                MapSpec::Spiral { a, b } | MapSpec::Generator { a, b, .. } => {
                    if name == "a" {
                        *a = value
                    } else {
                        *b = value
                    }
                }
                MapSpec::Identity => {
                    return Err(MpError::Config(format!("`{name}` needs a spiral or generator map")))
                }
            },
            "steps" => match &mut self.map {
                MapSpec::Generator { steps, .. } => *steps = value.max(1.0) as usize,
                _ => return Err(MpError::Config("`steps` needs a generator map".into())),
            },
            "psi0" => self.psi0 = value,
            "psi_x" => set_index(&mut self.psi, 0),
            "psi_y" => set_index(&mut self.psi, 1),
            "mu_boundary" => self.mu_boundary = value,
            "mu0" => self.mu0 = value,
            "mu_x" => set_index(&mut self.mu, 0),
            "mu_y" => set_index(&mut self.mu, 1),
            other => return Err(MpError::Config(format!("unknown gauge parameter `{other}`"))),
        }
        Ok(())
    }
}
