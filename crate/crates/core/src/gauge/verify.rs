use crate::action::boundary_action_table;
use crate::error::Result;
use crate::flow::{ray_fan, scattering, FlowOptions};
use crate::geometry::{FieldModel, Mat, Point, ScenarioFields};
use crate::systems::MpSystem;

use super::GaugeTransform;

/// Largest componentwise residual of each defining relation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RelationResiduals {
    pub metric: f64,
    pub one_form: f64,
    pub potential: f64,
}

impl RelationResiduals {
    pub fn named(&self) -> [(&'static str, f64); 3] {
        [("metric", self.metric), ("one_form", self.one_form), ("potential", self.potential)]
    }

    pub fn max(&self) -> f64 {
        self.metric.max(self.one_form).max(self.potential)
    }
}

/// Residuals of `g' = f*g/μ`, `α' = f*α + dφ`, `U' = μ(f*U - k) + k` at `points`.
pub fn relation_residuals<const D: usize>(
    sys: &MpSystem<D>,
    other: &MpSystem<D>,
    gauge: &GaugeTransform<D>,
    points: &[Point<D>],
) -> RelationResiduals {
    let mut r = RelationResiduals::default();
    for x in points {
        let (g, alpha, u) = gauge.transform_at(&sys.fields, x);
        r.metric = r.metric.max((g - other.fields.metric(x)).amax());
        r.one_form = r.one_form.max((alpha - other.fields.one_form(x)).amax());
        r.potential = r.potential.max((u - other.fields.potential(x)).abs());
    }
    r
}

/// Differences of `g`, `U` and the tangential part of `α` along `∂M`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryResiduals {
    pub metric: f64,
    pub potential: f64,
    pub tangential_one_form: f64,
}

impl BoundaryResiduals {
    pub fn max(&self) -> f64 {
        self.metric.max(self.potential).max(self.tangential_one_form)
    }
}

/// Scattering differences over a ray fan; glancing rays are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScatteringDifferences {
    pub exit_point: f64,
    pub exit_velocity: f64,
    pub action: f64,
    /// Exit times are reported but not compared: `μ` reparametrizes time.
    pub exit_time: f64,
    pub compared: usize,
    pub glancing: usize,
    pub failures: usize,
}

impl ScatteringDifferences {
    pub fn max(&self) -> f64 {
        self.exit_point.max(self.exit_velocity).max(self.action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceSampling {
    pub interior: usize,
    pub boundary: usize,
    pub table: usize,
    pub rays: usize,
}

impl Default for EquivalenceSampling {
    fn default() -> Self {
        Self { interior: 100, boundary: 64, table: 16, rays: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub relations: RelationResiduals,
    pub boundary: BoundaryResiduals,
    /// `max |𝔸₁ - 𝔸₂|` over entries computed in both tables.
    pub table_difference: f64,
    pub table_entries: usize,
    pub table_failures: usize,
    pub scattering: ScatteringDifferences,
}

impl EquivalenceReport {
    /// All boundary-data comparisons within `tol` and no failed entries.
    pub fn boundary_data_agree(&self, tol: f64) -> bool {
        self.table_failures == 0
            && self.scattering.failures == 0
            && self.table_difference <= tol
            && self.scattering.max() <= tol
    }
}

fn tangent_basis<const D: usize>(normal: &Point<D>) -> Vec<Point<D>> {
    crate::flow::orthonormal_complement(&Mat::<D>::identity(), normal)
}

fn boundary_residuals<const D: usize>(
    a: &ScenarioFields<D>,
    b: &ScenarioFields<D>,
    sys: &MpSystem<D>,
    n: usize,
) -> BoundaryResiduals {
    let mut r = BoundaryResiduals::default();
    for p in sys.domain.boundary_grid(n) {
        r.metric = r.metric.max((a.metric(&p) - b.metric(&p)).amax());
        r.potential = r.potential.max((a.potential(&p) - b.potential(&p)).abs());
        let diff = a.one_form(&p) - b.one_form(&p);
        for t in tangent_basis(&sys.domain.rho_gradient(&p)) {
            r.tangential_one_form = r.tangential_one_form.max(diff.dot(&t).abs());
        }
    }
    r
}

/// Compares two systems claimed to be related by `gauge`: the defining
/// relations in the interior, the boundary restrictions, the boundary action
/// tables and scattering over a ray fan.
pub fn verify_equivalence<const D: usize>(
    sys: &MpSystem<D>,
    other: &MpSystem<D>,
    gauge: &GaugeTransform<D>,
    sampling: &EquivalenceSampling,
    opts: &FlowOptions,
) -> Result<EquivalenceReport> {
    let points = sys.domain.interior_samples(sampling.interior, 0.0);
    let relations = relation_residuals(sys, other, gauge, &points);
    let boundary = boundary_residuals(&sys.fields, &other.fields, sys, sampling.boundary);

    let t1 = boundary_action_table(sys, sampling.table, opts)?;
    let t2 = boundary_action_table(other, sampling.table, opts)?;
    let table_failures = t1.failures.len() + t2.failures.len();

    let mut sc = ScatteringDifferences::default();
    for (p, u) in ray_fan(sys, sampling.rays) {
        match (scattering(sys, &p, &u, opts), scattering(other, &p, &u, opts)) {
            (Ok(a), Ok(b)) => {
                if a.glancing || b.glancing {
                    sc.glancing += 1;
                    continue;
                }
                sc.compared += 1;
                sc.exit_point = sc.exit_point.max((a.exit_point - b.exit_point).norm());
                sc.exit_velocity = sc.exit_velocity.max((a.exit_velocity - b.exit_velocity).norm());
                sc.action = sc.action.max((a.action - b.action).abs());
                sc.exit_time = sc.exit_time.max((a.tau - b.tau).abs());
            }
            _ => sc.failures += 1,
        }
    }
    Ok(EquivalenceReport {
        relations,
        boundary,
        table_difference: t1.max_difference(&t2),
        table_entries: t1.finite_entries().min(t2.finite_entries()),
        table_failures,
        scattering: sc,
    })
}

/// `U + amplitude · (ρ / ρ(center))²`: same boundary data up to first order,
/// different interior.
#[derive(Clone)]
struct PerturbedPotential<const D: usize> {
    base: ScenarioFields<D>,
    domain: crate::geometry::ChartDomain<D>,
    amplitude: f64,
}

impl<const D: usize> FieldModel<D> for PerturbedPotential<D> {
    fn metric(&self, x: &Point<D>) -> Mat<D> {
        self.base.metric(x)
    }

    fn one_form(&self, x: &Point<D>) -> Point<D> {
        self.base.one_form(x)
    }

    fn potential(&self, x: &Point<D>) -> f64 {
        let scale = self.domain.rho(&self.domain.center());
        let r = self.domain.rho(x) / scale;
        self.base.potential(x) + self.amplitude * r * r
    }
}

/// A control system that breaks every k-gauge relation through `U`.
pub fn perturb_potential<const D: usize>(sys: &MpSystem<D>, amplitude: f64) -> Result<MpSystem<D>> {
    let model = PerturbedPotential { base: sys.fields.clone(), domain: sys.domain.clone(), amplitude };
    let fields = ScenarioFields::new(std::sync::Arc::new(model)).with_mode(sys.fields.mode());
    MpSystem::with_grid(sys.domain.clone(), fields, sys.k, 61)
}
