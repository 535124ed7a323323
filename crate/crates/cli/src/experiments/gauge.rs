use std::sync::Arc;

use rand::Rng;

use mpflow_core::catalog::ScenarioKey;
use mpflow_core::gauge::{
    counterexample_potentials, perturb_potential, reduction_correspondence, relation_residuals, verify_equivalence,
    EquivalenceReport, EquivalenceSampling, GaugeSpec, Identity, MapSpec,
};
use mpflow_core::geometry::Constant;
use mpflow_core::systems::reduce;
use mpflow_core::{GaugeTransform, MpSystem, Point};

use super::Run;
use crate::config::ExperimentKind;
use crate::error::{HarnessError, Result};
use crate::output::CsvTable;
use crate::report::Check;

const RELATION_TOL: f64 = 1e-8;
const BOUNDARY_TOL: f64 = 1e-10;
const BOUNDARY_DATA_TOL: f64 = 1e-6;
const MU_RECOVERY_TOL: f64 = 1e-9;
const FUNCTORIALITY_TOL: f64 = 1e-9;
const REDUCTION_EQUALITY_TOL: f64 = 1e-12;
const CONTROL_THRESHOLD: f64 = 1e-3;
const GROUP_TOL: f64 = 1e-9;
const IDENTITY_LAW_TOL: f64 = 1e-12;

fn sampling(run: &Run) -> EquivalenceSampling {
    let s = run.sampling();
    EquivalenceSampling { interior: s.interior, boundary: s.boundary, table: s.table, rays: s.rays }
}

fn sample_points(sys: &MpSystem<2>, interior: usize, boundary: usize) -> Vec<Point<2>> {
    let mut points = sys.domain.interior_samples(interior, 0.0);
    points.extend(sys.domain.boundary_grid(boundary));
    points
}

fn report_boundary_data(run: &mut Run, report: &EquivalenceReport, compare_scattering: bool) {
    run.check(Check::at_most(
        "table_failures",
        report.table_failures as f64,
        0.0,
        "all shooting problems converge",
    ));
    run.check(Check::at_most(
        "table_difference",
        report.table_difference,
        BOUNDARY_DATA_TOL,
        "boundary action table of the other system",
    ));
    let sc = &report.scattering;
    run.note(format!(
        "scattering: {} rays compared, {} glancing, exit-time difference {:e} (not compared)",
        sc.compared, sc.glancing, sc.exit_time
    ));
    if compare_scattering {
        run.check(Check::at_most("boundary_restriction", report.boundary.max(), BOUNDARY_TOL, "g, U, i*alpha on the boundary"));
        run.check(Check::at_most("scattering_failures", sc.failures as f64, 0.0, "every ray exits in both systems"));
        run.check(Check::at_most("scattering_difference", sc.max(), BOUNDARY_DATA_TOL, "exit point, velocity and action"));
    } else {
        run.note(format!(
            "gauge changes boundary data; scattering difference {:e} reported only",
            sc.max()
        ));
    }
}

pub(super) fn gauge(run: &mut Run) -> Result<()> {
    run.require_dim(ExperimentKind::Gauge, &[2])?;
    if run.spec.key == ScenarioKey::Counterexample {
        return counterexample(run);
    }
    let gauge_config = run
        .config
        .gauge
        .as_ref()
        .ok_or_else(|| HarnessError::Invalid("experiment `gauge` needs a `gauge` section".into()))?;
    let spec = gauge_config.spec()?;
    let sys = run.system::<2>()?;
    let opts = run.opts();
    let g = spec.build(&sys.domain, sys.k)?;
    let image = g.apply(&sys)?;
    let sampling = sampling(run);

    let report = verify_equivalence(&sys, &image, &g, &sampling, &opts)?;
    run.check(Check::at_most("relation_residual", report.relations.max(), RELATION_TOL, "defining relations of the gauge"));
    report_boundary_data(run, &report, spec.preserves_boundary());
    run.check(Check::above(
        "energy_gap",
        sys.k - image.max_potential(),
        0.0,
        "k > max U' on the image",
    ));

    let points = sample_points(&sys, sampling.interior, sampling.boundary);
    let corr = reduction_correspondence(&sys, &image, g.f.clone(), g.phi.clone())?;
    let recovered = points.iter().map(|x| (corr.transform.mu.value(x) - g.mu.value(x)).abs()).fold(0.0, f64::max);
    run.check(Check::at_most("mu_recovery", recovered, MU_RECOVERY_TOL, "(k - U') / (k - f*U)"));

    let magnetic = GaugeTransform { mu: Arc::new(Constant(1.0)), k: 0.5, ..g.clone() };
    let functorial = relation_residuals(&reduce(&sys), &reduce(&image), &magnetic, &points).max();
    run.check(Check::at_most(
        "reduction_functoriality",
        functorial,
        FUNCTORIALITY_TOL,
        "magnetic gauge (f, phi) between the reductions",
    ));

    let other = perturb_potential(&image, run.sampling().perturbation)?;
    let control = verify_equivalence(&sys, &other, &g, &sampling, &opts)?;
    run.check(Check::above(
        "control_relation_residual",
        control.relations.max(),
        CONTROL_THRESHOLD,
        "perturbed potential breaks the relations",
    ));
    run.check(Check::above(
        "control_table_difference",
        control.table_difference,
        CONTROL_THRESHOLD,
        "perturbed potential changes the action table",
    ));

    run.file("gauge_tables", tables_csv(&report, &control));
    Ok(())
}

fn tables_csv(report: &EquivalenceReport, control: &EquivalenceReport) -> CsvTable {
    let mut t = CsvTable::with_header(&[
        "table_difference",
        "scattering_difference",
        "relation_residual",
        "control_table_difference",
        "control_relation_residual",
    ]);
    t.rows.push(vec![
        report.table_difference,
        report.scattering.max(),
        report.relations.max(),
        control.table_difference,
        control.relations.max(),
    ]);
    t
}

fn counterexample(run: &mut Run) -> Result<()> {
    let (first, second, g) = run.spec.counterexample_pair_with_mode::<2>(run.scenario.mode())?;
    let params = run.spec.counterexample;
    let radius = run.spec.radius;
    let sampling = sampling(run);
    let points = sample_points(&first, sampling.interior, sampling.boundary);

    let (r1, r2) = (reduce(&first), reduce(&second));
    let mut same = 0.0f64;
    for x in &points {
        same = same
            .max((r1.fields.metric(x) - r2.fields.metric(x)).amax())
            .max((r1.fields.one_form(x) - r2.fields.one_form(x)).amax());
    }
    run.check(Check::at_most("reductions_identical", same, REDUCTION_EQUALITY_TOL, "common reduced system"));

    let mut ordering = f64::INFINITY;
    let mut table = CsvTable::with_header(&["x1", "x2", "phi", "two_psi", "mu"]);
    for x in first.domain.interior_samples(sampling.interior, 0.0) {
        let (phi, two_psi) = (first.fields.potential(&x), second.fields.potential(&x));
        ordering = ordering.min(1.5 - phi).min(two_psi - 1.5);
        table.rows.push(vec![x[0], x[1], phi, two_psi, g.mu.value(&x)]);
    }
    run.check(Check::above("interior_ordering", ordering, 0.0, "phi < 3/2 < 2 psi (no classical gauge)"));

    let corr = reduction_correspondence(&first, &second, Arc::new(Identity), Arc::new(Constant(0.0)))?;
    run.check(Check::at_most("relation_residual", corr.residuals.max(), RELATION_TOL, "k-gauge with f = id, phi = 0"));
    let mut mu_err = 0.0f64;
    for x in &points {
        let (phi, psi) = counterexample_potentials(&params, radius, x);
        let expected = (3.0 - 2.0 * psi) / (3.0 - phi);
        mu_err = mu_err.max((corr.transform.mu.value(x) - expected).abs());
    }
    run.check(Check::at_most("mu_closed_form", mu_err, MU_RECOVERY_TOL, "(3 - 2 psi) / (3 - phi)"));

    let report = verify_equivalence(&first, &second, &g, &sampling, &run.opts())?;
    report_boundary_data(run, &report, true);
    run.file("counterexample", table);
    Ok(())
}

fn random_gauge(rng: &mut impl Rng, generator: bool) -> GaugeSpec {
    let mut r = |s: f64| rng.gen_range(-s..s);
    let map = if generator {
        MapSpec::Generator { a: r(0.3), b: r(0.3), shift: vec![r(0.2), r(0.2)], steps: 32 }
    } else {
        MapSpec::Spiral { a: r(0.4), b: r(0.4) }
    };
    GaugeSpec {
        map,
        psi0: r(0.5),
        psi: vec![r(0.5), r(0.5)],
        mu_boundary: r(0.2),
        mu0: r(0.3),
        mu: vec![r(0.3), r(0.3)],
    }
}

pub(super) fn gauge_group(run: &mut Run) -> Result<()> {
    run.require_dim(ExperimentKind::GaugeGroup, &[2])?;
    let sys = run.system::<2>()?;
    let points = sys.domain.interior_samples(run.sampling().points, 0.0);
    let identity = GaugeTransform::identity(sys.k);
    let mut table = CsvTable::with_header(&["pair", "composition", "identity", "inverse"]);
    let (mut comp, mut ident, mut inv) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..run.sampling().gauge_pairs {
        let s1 = random_gauge(&mut run.rng, false);
        let s2 = random_gauge(&mut run.rng, i % 2 == 1);
        let g1 = s1.build(&sys.domain, sys.k)?;
        let g2 = s2.build(&sys.domain, sys.k)?;
        let sequential = g2.apply(&g1.apply(&sys)?)?;
        let c = relation_residuals(&sys, &sequential, &g1.compose(&g2)?, &points).max();

        let image = g2.apply(&sys)?;
        let l = relation_residuals(&sys, &image, &identity.compose(&g2)?, &points).max();
        let r = relation_residuals(&sys, &image, &g2.compose(&identity)?, &points).max();

        let back = relation_residuals(&image, &sys, &g2.inverse(), &points).max();
        let round = relation_residuals(&sys, &sys, &g2.compose(&g2.inverse())?, &points).max();

        comp = comp.max(c);
        ident = ident.max(l.max(r));
        inv = inv.max(back.max(round));
        table.rows.push(vec![i as f64, c, l.max(r), back.max(round)]);
    }
    run.check(Check::at_most("composition", comp, GROUP_TOL, "sequential application"));
    run.check(Check::at_most("identity_law", ident, IDENTITY_LAW_TOL, "G composed with the identity"));
    run.check(Check::at_most("inverse_law", inv, GROUP_TOL, "G composed with its inverse"));
    run.file("gauge_group", table);
    Ok(())
}
