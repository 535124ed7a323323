use std::sync::Arc;

use super::scalars::{AffineScalar, BoundaryVanishing};
use super::*;
use crate::action::boundary_action_table;
use crate::catalog::DiskModel;
use crate::flow::FlowOptions;
use crate::geometry::{ChartDomain, Constant, DerivativeMode, ScenarioFields};
use crate::systems::{reduce, MpSystem};

fn domain() -> ChartDomain<2> {
    ChartDomain::ball(1.0).unwrap()
}

fn system(k: f64) -> MpSystem<2> {
    let model = DiskModel { conformal: 0.15, field: 0.4, quadratic_potential: 0.3, ..DiskModel::flat() };
    MpSystem::new(domain(), ScenarioFields::new(Arc::new(model)), k).unwrap()
}

fn spec(a: f64, b: f64, mu0: f64) -> GaugeSpec {
    GaugeSpec {
        map: MapSpec::Spiral { a, b },
        psi0: 0.2,
        psi: vec![0.1, -0.3],
        mu_boundary: 0.0,
        mu0,
        mu: vec![0.1, 0.05],
    }
}

fn samples() -> Vec<Point<2>> {
    let d = domain();
    let mut p = d.interior_samples(60, 0.0);
    p.extend(d.boundary_grid(16));
    p
}

fn assert_related(a: &MpSystem<2>, b: &MpSystem<2>, gauge: &GaugeTransform<2>, tol: f64) {
    let r = relation_residuals(a, b, gauge, &samples());
    assert!(r.max() < tol, "{r:?}");
}

#[test]
fn identity_gauge_changes_nothing() {
    let sys = system(1.0);
    let image = GaugeTransform::identity(1.0).apply(&sys).unwrap();
    for x in samples() {
        assert!((sys.fields.metric(&x) - image.fields.metric(&x)).amax() < 1e-15);
        assert!((sys.fields.one_form(&x) - image.fields.one_form(&x)).amax() < 1e-15);
        assert!((sys.fields.potential(&x) - image.fields.potential(&x)).abs() < 1e-15);
    }
}

#[test]
fn phi_only_gauge_adds_an_exact_form() {
    let sys = system(1.0);
    let phi = Arc::new(BoundaryVanishing {
        domain: domain(),
        psi: Arc::new(AffineScalar { constant: 0.5, linear: Point::<2>::new(0.2, 0.0) }),
    });
    let gauge = GaugeTransform::new(Arc::new(Identity), phi.clone(), Arc::new(Constant(1.0)), 1.0, &domain()).unwrap();
    let image = gauge.apply(&sys).unwrap();
    for x in samples() {
        let diff = image.fields.one_form(&x) - sys.fields.one_form(&x);
        assert!((diff - phi.gradient(&x)).amax() < 1e-14);
        assert!((sys.fields.metric(&x) - image.fields.metric(&x)).amax() < 1e-15);
    }
}

#[test]
fn mu_scales_metric_and_potential() {
    let sys = system(2.0);
    let gauge = GaugeTransform::new(Arc::new(Identity), Arc::new(Constant(0.0)), Arc::new(Constant(2.0)), 2.0, &domain())
        .unwrap();
    let image = gauge.apply(&sys).unwrap();
    let x = Point::<2>::new(0.3, -0.2);
    assert!((image.fields.metric(&x) * 2.0 - sys.fields.metric(&x)).amax() < 1e-15);
    let u = sys.fields.potential(&x);
    assert!((image.fields.potential(&x) - (2.0 * (u - 2.0) + 2.0)).abs() < 1e-14);
}

#[test]
fn invalid_gauges_are_rejected() {
    let d = domain();
    let generator = GaugeSpec { map: MapSpec::Generator { a: 0.1, b: 0.0, shift: vec![0.5, 0.0], steps: 8 }, ..GaugeSpec::default() };
    assert!(generator.build(&d, 1.0).is_ok());
    let phi = Arc::new(Constant(0.1));
    assert!(GaugeTransform::new(Arc::new(Identity), phi, Arc::new(Constant(1.0)), 1.0, &d).is_err());
    let mu = Arc::new(Constant(-1.0));
    assert!(GaugeTransform::new(Arc::new(Identity), Arc::new(Constant(0.0)), mu, 1.0, &d).is_err());
}

#[test]
fn energy_level_must_match() {
    let sys = system(1.0);
    assert!(matches!(
        GaugeTransform::identity(2.0).apply(&sys),
        Err(MpError::EnergyLevelMismatch { .. })
    ));
}

#[test]
fn composition_matches_sequential_application() {
    let sys = system(1.0);
    let g1 = spec(0.3, 0.5, 0.2).build(&domain(), 1.0).unwrap();
    let g2 = spec(-0.2, 0.8, -0.1).build(&domain(), 1.0).unwrap();
    let sequential = g2.apply(&g1.apply(&sys).unwrap()).unwrap();
    let direct = g1.compose(&g2).unwrap().apply(&sys).unwrap();
    for x in samples() {
        assert!((sequential.fields.metric(&x) - direct.fields.metric(&x)).amax() < 1e-9);
        assert!((sequential.fields.one_form(&x) - direct.fields.one_form(&x)).amax() < 1e-9);
        assert!((sequential.fields.potential(&x) - direct.fields.potential(&x)).abs() < 1e-9);
    }
}

#[test]
fn composing_with_identity() {
    let sys = system(1.0);
    let g = spec(0.3, 0.5, 0.2).build(&domain(), 1.0).unwrap();
    let id = GaugeTransform::identity(1.0);
    let image = g.apply(&sys).unwrap();
    assert_related(&sys, &image, &g.compose(&id).unwrap(), 1e-12);
    assert_related(&sys, &image, &id.compose(&g).unwrap(), 1e-12);
}

#[test]
fn inverse_undoes_the_gauge() {
    let sys = system(1.0);
    let g = spec(0.3, 0.5, 0.2).build(&domain(), 1.0).unwrap();
    let image = g.apply(&sys).unwrap();
    assert_related(&image, &sys, &g.inverse(), 1e-9);
    assert_related(&sys, &sys, &g.compose(&g.inverse()).unwrap(), 1e-9);
}

#[test]
fn generator_gauge_inverse() {
    let sys = system(1.0);
    let g = GaugeSpec { map: MapSpec::Generator { a: 0.2, b: 0.4, shift: vec![0.1, 0.0], steps: 16 }, ..spec(0.0, 0.0, 0.1) }
        .build(&domain(), 1.0)
        .unwrap();
    let image = g.apply(&sys).unwrap();
    assert_related(&image, &sys, &g.inverse(), 1e-9);
}

#[test]
fn boundary_preservation_flag() {
    assert!(GaugeSpec::default().preserves_boundary());
    assert!(spec(0.0, 0.7, 0.3).preserves_boundary());
    assert!(!spec(0.2, 0.7, 0.3).preserves_boundary());
    assert!(!GaugeSpec { mu_boundary: 0.1, ..GaugeSpec::default() }.preserves_boundary());
}

#[test]
fn reductions_are_magnetically_gauge_related() {
    let sys = system(1.0);
    let g = spec(0.3, 0.5, 0.2).build(&domain(), 1.0).unwrap();
    let image = g.apply(&sys).unwrap();
    let magnetic = GaugeTransform { mu: Arc::new(Constant(1.0)), k: 0.5, ..g.clone() };
    assert_related(&reduce(&sys), &reduce(&image), &magnetic, 1e-10);
}

#[test]
fn correspondence_recovers_mu() {
    let sys = system(1.0);
    let g = spec(0.0, 0.6, 0.4).build(&domain(), 1.0).unwrap();
    let image = g.apply(&sys).unwrap();
    let c = reduction_correspondence(&sys, &image, g.f.clone(), g.phi.clone()).unwrap();
    assert!(c.residuals.max() < RELATION_TOLERANCE);
    for x in samples() {
        assert!((c.transform.mu.value(&x) - g.mu.value(&x)).abs() < 1e-10);
    }
}

#[test]
fn correspondence_fails_for_unrelated_reductions() {
    let sys = system(1.0);
    let other = MpSystem::new(domain(), ScenarioFields::new(Arc::new(DiskModel::flat())), 1.0).unwrap();
    let res = reduction_correspondence(&sys, &other, Arc::new(Identity), Arc::new(Constant(0.0)));
    assert!(matches!(res, Err(MpError::NotEquivalent { .. })));
}

#[test]
fn counterexample_reductions_coincide() {
    let base = Arc::new(DiskModel { conformal: 0.1, field: 0.3, ..DiskModel::flat() });
    let (a, b, gauge) =
        counterexample_pair(base, domain(), CounterexampleParams::default(), DerivativeMode::Analytic).unwrap();
    let (ra, rb) = (reduce(&a), reduce(&b));
    for x in samples() {
        assert!((ra.fields.metric(&x) - rb.fields.metric(&x)).amax() < 1e-12);
        assert!((ra.fields.one_form(&x) - rb.fields.one_form(&x)).amax() < 1e-15);
        let (phi, psi) = counterexample_potentials(&CounterexampleParams::default(), 1.0, &x);
        assert!((a.fields.potential(&x) - phi).abs() < 1e-15);
        assert!((b.fields.potential(&x) - 2.0 * psi).abs() < 1e-15);
        let mu = (3.0 - 2.0 * psi) / (3.0 - phi);
        assert!((gauge.mu.value(&x) - mu).abs() < 1e-14);
        if domain().rho(&x) > 1e-3 {
            assert!(phi < 1.5 && 2.0 * psi > 1.5 && mu < 1.0);
        } else {
            assert!((phi - 2.0 * psi).abs() < 1e-2);
        }
    }
    assert_related(&a, &b, &gauge, 1e-12);
}

#[test]
fn counterexample_tables_agree() {
    let base = Arc::new(DiskModel { field: 0.3, ..DiskModel::flat() });
    let (a, b, _) = counterexample_pair(base, domain(), CounterexampleParams::default(), DerivativeMode::Analytic).unwrap();
    let opts = FlowOptions::default();
    let (ta, tb) = (boundary_action_table(&a, 8, &opts).unwrap(), boundary_action_table(&b, 8, &opts).unwrap());
    assert!(ta.failures.is_empty() && tb.failures.is_empty());
    assert!(ta.max_difference(&tb) < 1e-6);
}

#[test]
fn counterexample_parameter_ranges() {
    for (c1, c2) in [(0.0, 0.1), (0.6, 0.1), (0.2, 0.0), (0.2, 0.3)] {
        assert!(CounterexampleParams { c1, c2 }.validate().is_err());
    }
    assert!(CounterexampleParams { c1: 0.5, c2: 0.25 }.validate().is_ok());
}

#[test]
fn boundary_preserving_gauge_keeps_boundary_actions() {
    let sys = system(1.0);
    let g = spec(0.0, 0.6, 0.3).build(&domain(), 1.0).unwrap();
    let image = g.apply(&sys).unwrap();
    let sampling = EquivalenceSampling { interior: 30, boundary: 32, table: 6, rays: 6 };
    let report = verify_equivalence(&sys, &image, &g, &sampling, &FlowOptions::default()).unwrap();
    assert!(report.relations.max() < 1e-12);
    assert!(report.boundary.max() < 1e-10, "{:?}", report.boundary);
    assert!(report.boundary_data_agree(1e-6), "{report:?}");
}

#[test]
fn perturbed_potential_is_flagged() {
    let sys = system(1.0);
    let other = perturb_potential(&sys, 0.2).unwrap();
    let g = GaugeTransform::identity(1.0);
    let sampling = EquivalenceSampling { interior: 30, boundary: 32, table: 6, rays: 6 };
    let report = verify_equivalence(&sys, &other, &g, &sampling, &FlowOptions::default()).unwrap();
    assert!(report.relations.potential > 0.1);
    assert!(report.boundary.max() < 1e-10);
    assert!(!report.boundary_data_agree(1e-6));
}
