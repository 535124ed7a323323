//! The k-gauge group acting on MP-systems.
//!
//! A gauge `(f, φ, μ)` at level `k` sends `(g, α, U)` to
//! `(f*g / μ, f*α + dφ, μ (f*U - k) + k)`, where `f` fixes `∂M` pointwise,
//! `φ` vanishes on `∂M` and `μ > 0`.

mod catalog;
mod counterexample;
pub mod maps;
pub mod scalars;
mod verify;

pub use catalog::{GaugeSpec, MapSpec};
pub use counterexample::{counterexample_pair, counterexample_potentials, CounterexampleParams, COUNTEREXAMPLE_K};
pub use maps::{AffineField, BoundaryFixingMap, Composed, GeneratorFlow, Identity, Inverted, SpiralFlow};
pub use verify::{
    perturb_potential, relation_residuals, verify_equivalence, BoundaryResiduals,
    EquivalenceReport, EquivalenceSampling, RelationResiduals, ScatteringDifferences,
};

use std::sync::Arc;

use crate::error::{MpError, Result};
use crate::geometry::{ChartDomain, Constant, FieldModel, Mat, Point, ScalarField, ScenarioFields};
use crate::systems::MpSystem;

use scalars::{Product, Pullback, Reciprocal, Scaled, Sum};

/// Sampling tolerance for `f|∂M = id` and `φ|∂M = 0`.
pub const BOUNDARY_GAUGE_TOLERANCE: f64 = 1e-10;
/// Smallest admissible sampled value of `μ`.
pub const MU_FLOOR: f64 = 1e-8;

/// A k-gauge transformation `(f, φ, μ)`.
#[derive(Clone)]
pub struct GaugeTransform<const D: usize = 2> {
    pub f: Arc<dyn BoundaryFixingMap<D>>,
    pub phi: Arc<dyn ScalarField<D>>,
    pub mu: Arc<dyn ScalarField<D>>,
    pub k: f64,
}

impl<const D: usize> std::fmt::Debug for GaugeTransform<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaugeTransform")
            .field("k", &self.k)
            .field("f_is_identity", &self.f.is_identity())
            .finish_non_exhaustive()
    }
}

impl<const D: usize> GaugeTransform<D> {
    /// Builds a gauge and checks its defining properties on samples of `domain`.
    pub fn new(
        f: Arc<dyn BoundaryFixingMap<D>>,
        phi: Arc<dyn ScalarField<D>>,
        mu: Arc<dyn ScalarField<D>>,
        k: f64,
        domain: &ChartDomain<D>,
    ) -> Result<Self> {
        let g = Self { f, phi, mu, k };
        g.validate(domain)?;
        Ok(g)
    }

    pub fn identity(k: f64) -> Self {
        Self { f: Arc::new(Identity), phi: Arc::new(Constant(0.0)), mu: Arc::new(Constant(1.0)), k }
    }

    pub fn validate(&self, domain: &ChartDomain<D>) -> Result<()> {
        for p in domain.boundary_grid(64) {
            let moved = (self.f.apply(&p) - p).norm();
            if moved > BOUNDARY_GAUGE_TOLERANCE {
                return Err(MpError::InvalidParameter(format!(
                    "diffeomorphism moves boundary point {:?} by {moved:e}",
                    p.as_slice()
                )));
            }
            let phi = self.phi.value(&p);
            if phi.abs() > BOUNDARY_GAUGE_TOLERANCE {
                return Err(MpError::InvalidParameter(format!(
                    "phi = {phi:e} on the boundary at {:?}",
                    p.as_slice()
                )));
            }
        }
        let mut points = domain.interior_samples(256, 0.0);
        points.extend(domain.boundary_grid(64));
        for x in points {
            let mu = self.mu.value(&x);
            if !(mu > MU_FLOOR) {
                return Err(MpError::InvalidParameter(format!(
                    "mu = {mu:e} is not positive at {:?}",
                    x.as_slice()
                )));
            }
        }
        Ok(())
    }

    /// `(g', α', U')` at `x` for the base fields `base`.
    pub fn transform_at(&self, base: &ScenarioFields<D>, x: &Point<D>) -> (Mat<D>, Point<D>, f64) {
        let (y, jac) = self.f.apply_with_jacobian(x);
        let mu = self.mu.value(x);
        let g = jac.transpose() * base.metric(&y) * jac / mu;
        let alpha = jac.transpose() * base.one_form(&y) + self.phi.gradient(x);
        let u = mu * (base.potential(&y) - self.k) + self.k;
        (g, alpha, u)
    }

    /// The gauge-equivalent system.
    pub fn apply(&self, sys: &MpSystem<D>) -> Result<MpSystem<D>> {
        if (self.k - sys.k).abs() > 1e-12 * sys.k.abs().max(1.0) {
            return Err(MpError::EnergyLevelMismatch { gauge_k: self.k, system_k: sys.k });
        }
        let model = GaugedModel { base: sys.fields.clone(), gauge: self.clone() };
        let fields = ScenarioFields::new(Arc::new(model)).with_mode(sys.fields.mode());
        let mut samples = sys.domain.interior_samples(512, 0.0);
        samples.extend(sys.domain.boundary_grid(128));
        let mut u_max = f64::NEG_INFINITY;
        for x in &samples {
            u_max = u_max.max(fields.potential(x));
        }
        Ok(MpSystem::from_parts(sys.domain.clone(), fields, sys.k, u_max))
    }

    /// `self` followed by `other`: `(f1 ∘ f2, f2*φ1 + φ2, μ2 · f2*μ1)`.
    pub fn compose(&self, other: &GaugeTransform<D>) -> Result<GaugeTransform<D>> {
        if (self.k - other.k).abs() > 1e-12 * self.k.abs().max(1.0) {
            return Err(MpError::EnergyLevelMismatch { gauge_k: other.k, system_k: self.k });
        }
        let f = Arc::new(Composed { outer: self.f.clone(), inner: other.f.clone() });
        let phi = Arc::new(Sum(
            Arc::new(Pullback { field: self.phi.clone(), map: other.f.clone() }),
            other.phi.clone(),
        ));
        let mu = Arc::new(Product(
            other.mu.clone(),
            Arc::new(Pullback { field: self.mu.clone(), map: other.f.clone() }),
        ));
        Ok(GaugeTransform { f, phi, mu, k: self.k })
    }

    /// `(f⁻¹, -φ ∘ f⁻¹, 1 / (μ ∘ f⁻¹))`.
    pub fn inverse(&self) -> GaugeTransform<D> {
        let f_inv = self.f.inverse();
        let phi = Arc::new(Scaled {
            field: Arc::new(Pullback { field: self.phi.clone(), map: f_inv.clone() }),
            factor: -1.0,
        });
        let mu = Arc::new(Reciprocal(Arc::new(Pullback { field: self.mu.clone(), map: f_inv.clone() })));
        GaugeTransform { f: f_inv, phi, mu, k: self.k }
    }
}

/// Field model of a gauge image.
#[derive(Clone)]
pub struct GaugedModel<const D: usize> {
    base: ScenarioFields<D>,
    gauge: GaugeTransform<D>,
}

impl<const D: usize> FieldModel<D> for GaugedModel<D> {
    fn metric(&self, x: &Point<D>) -> Mat<D> {
        self.gauge.transform_at(&self.base, x).0
    }

    fn one_form(&self, x: &Point<D>) -> Point<D> {
        let (y, jac) = self.gauge.f.apply_with_jacobian(x);
        jac.transpose() * self.base.one_form(&y) + self.gauge.phi.gradient(x)
    }

    fn potential(&self, x: &Point<D>) -> f64 {
        let y = self.gauge.f.apply(x);
        self.gauge.mu.value(x) * (self.base.potential(&y) - self.gauge.k) + self.gauge.k
    }
}

/// `μ = (k - U') / (k - f*U)` together with its certified gauge.
#[derive(Clone)]
pub struct Correspondence<const D: usize> {
    pub transform: GaugeTransform<D>,
    pub residuals: RelationResiduals,
}

#[derive(Clone)]
struct CorrespondenceFactor<const D: usize> {
    first: ScenarioFields<D>,
    second: ScenarioFields<D>,
    f: Arc<dyn BoundaryFixingMap<D>>,
    k: f64,
}

impl<const D: usize> ScalarField<D> for CorrespondenceFactor<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        (self.k - self.second.potential(x)) / (self.k - self.first.potential(&self.f.apply(x)))
    }
}

/// Tolerance for the three relations certified by [`reduction_correspondence`].
pub const RELATION_TOLERANCE: f64 = 1e-8;

/// Recovers `μ` for two systems whose reductions are magnetically
/// gauge-related by `(f, φ)` and certifies the resulting k-gauge.
pub fn reduction_correspondence<const D: usize>(
    sys: &MpSystem<D>,
    other: &MpSystem<D>,
    f: Arc<dyn BoundaryFixingMap<D>>,
    phi: Arc<dyn ScalarField<D>>,
) -> Result<Correspondence<D>> {
    if (sys.k - other.k).abs() > 1e-12 * sys.k.abs().max(1.0) {
        return Err(MpError::EnergyLevelMismatch { gauge_k: other.k, system_k: sys.k });
    }
    let mu = Arc::new(CorrespondenceFactor {
        first: sys.fields.clone(),
        second: other.fields.clone(),
        f: f.clone(),
        k: sys.k,
    });
    let transform = GaugeTransform::new(f, phi, mu, sys.k, &sys.domain)?;
    let mut points = sys.domain.interior_samples(200, 0.0);
    points.extend(sys.domain.boundary_grid(32));
    let residuals = relation_residuals(sys, other, &transform, &points);
    for (relation, residual) in residuals.named() {
        if residual > RELATION_TOLERANCE {
            return Err(MpError::NotEquivalent { relation, residual, tolerance: RELATION_TOLERANCE });
        }
    }
    Ok(Correspondence { transform, residuals })
}

#[cfg(test)]
mod tests;
