use rand::Rng;

use mpflow_core::action::{action_along, boundary_action_table, magnetic_action_along, mane_potential, polygon_action};
use mpflow_core::flow::{integrate_to_exit, ray_fan, reparametrize_to_reduced, scattering};
use mpflow_core::geometry::{inner, inward_normal_at};
use mpflow_core::systems::{energy, reduce, sample_convexity_margins, sphere_lift};
use mpflow_core::{ChartDomain, Formulation, MpSystem, PhaseState, Point};

use super::{min_of, Run};
use crate::config::ExperimentKind;
use crate::error::Result;
use crate::oracles::planar_exit;
use crate::output::CsvTable;
use crate::report::Check;

const RECORD_ENERGY_TOL: f64 = 1e-8;
const ARC_ORACLE_TOL: f64 = 1e-7;
const CHORD_ORACLE_TOL: f64 = 1e-7;
const REDUCED_METRIC_TOL: f64 = 1e-12;
const UNIT_SPEED_TOL: f64 = 1e-8;
const REDUCTION_ACTION_TOL: f64 = 1e-6;
const POLYGONS_PER_PAIR: usize = 20;
const POLYGON_NODES: usize = 64;

fn angle(v: &Point<2>) -> f64 {
    v[1].atan2(v[0])
}

/// Flat metric, constant field and no potential on a round disk.
fn planar(run: &Run) -> bool {
    run.spec.is_flat_magnetic() && run.spec.is_round() && run.spec.dim == 2
}

pub(super) fn scatter(run: &mut Run) -> Result<()> {
    run.require_dim(ExperimentKind::Scatter, &[2])?;
    let sys = run.system::<2>()?;
    let opts = run.opts();
    let oracle = planar(run);
    let (radius, b, k) = (run.spec.radius, run.spec.model.field, sys.k);

    let mut table = CsvTable::with_header(&["theta_in", "dir_in", "theta_out", "dir_out", "tau", "action"]);
    let (mut e_err, mut entry_out, mut exit_in) = (0.0f64, 0.0f64, 0.0f64);
    let (mut d_point, mut d_vel, mut d_tau, mut d_action) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut failures, mut glancing) = (0usize, 0usize);
    for (i, (p, u)) in ray_fan(&sys, run.sampling().rays).into_iter().enumerate() {
        let rec = match scattering(&sys, &p, &u, &opts) {
            Ok(r) => r,
            Err(e) => {
                failures += 1;
                run.note(format!("ray {i}: {e}"));
                continue;
            }
        };
        table.rows.push(vec![
            sys.domain.boundary_params(&rec.entry_point)[0],
            angle(&rec.entry_velocity),
            sys.domain.boundary_params(&rec.exit_point)[0],
            angle(&rec.exit_velocity),
            rec.tau,
            rec.action,
        ]);
        e_err = e_err
            .max((energy(&sys, &rec.entry_point, &rec.entry_velocity) - k).abs())
            .max((energy(&sys, &rec.exit_point, &rec.exit_velocity) - k).abs());
        let g_in = sys.fields.metric(&rec.entry_point);
        let nu_in = inward_normal_at(&sys.fields, &sys.domain, &rec.entry_point)?;
        entry_out = entry_out.max(-inner(&g_in, &rec.entry_velocity, &nu_in));
        if rec.glancing {
            glancing += 1;
        } else {
            let g_out = sys.fields.metric(&rec.exit_point);
            let nu_out = inward_normal_at(&sys.fields, &sys.domain, &rec.exit_point)?;
            exit_in = exit_in.max(inner(&g_out, &rec.exit_velocity, &nu_out));
        }
        if oracle {
            let arc = planar_exit(radius, b, &rec.entry_point, &rec.entry_velocity);
            d_point = d_point.max((rec.exit_point - arc.point).norm());
            d_vel = d_vel.max((rec.exit_velocity - arc.velocity).norm());
            d_tau = d_tau.max((rec.tau - arc.tau).abs());
            d_action = d_action.max((rec.action - arc.action(k)).abs());
        }
    }
    run.check(Check::at_most("record_energy", e_err, RECORD_ENERGY_TOL, "E = k at entry and exit"));
    run.check(Check::at_most("entry_outward_component", entry_out, 0.0, "<v, nu> >= 0 at entry"));
    run.check(Check::at_most("exit_inward_component", exit_in, 0.0, "<v, nu> <= 0 at exit (non-glancing)"));
    run.check(Check::at_most("scattering_failures", failures as f64, 0.0, "every ray exits"));
    run.note(format!("{glancing} glancing rays"));
    if oracle {
        let name = if b == 0.0 { "chord" } else { "larmor" };
        run.check(Check::at_most(format!("{name}_exit_point"), d_point, ARC_ORACLE_TOL, "planar arc"));
        run.check(Check::at_most(format!("{name}_exit_velocity"), d_vel, ARC_ORACLE_TOL, "planar arc"));
        run.check(Check::at_most(format!("{name}_exit_time"), d_tau, ARC_ORACLE_TOL, "planar arc"));
        run.check(Check::at_most(format!("{name}_action"), d_action, ARC_ORACLE_TOL, "arc length minus flux"));
    }
    run.file("scattering", table);
    Ok(())
}

fn table_csv(params: &[Vec<f64>], values: &[Vec<f64>]) -> CsvTable {
    let list = params.iter().map(|p| format!("{}", p[0])).collect::<Vec<_>>().join(",");
    CsvTable {
        metadata: vec![format!("row_params: {list}"), format!("col_params: {list}")],
        header: None,
        rows: values.to_vec(),
    }
}

fn random_boundary_pair(domain: &ChartDomain<2>, rng: &mut impl Rng) -> (Point<2>, Point<2>) {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    let gap = rng.gen_range(0.2..(std::f64::consts::TAU - 0.2));
    (domain.boundary_point(&[a]), domain.boundary_point(&[a + gap]))
}

/// Polygons through bumped samples of the minimizer; returns the smallest
/// excess of their action over the unbumped polygon.
fn minimality_excess(sys: &MpSystem<2>, a: &mpflow_core::ActionValue<2>, rng: &mut impl Rng) -> Result<f64> {
    let base: Vec<Point<2>> = (0..=POLYGON_NODES)
        .map(|i| a.trajectory.point_at(a.transit_time * i as f64 / POLYGON_NODES as f64))
        .collect();
    let reference = polygon_action(sys, &base)?;
    let mut excess = f64::INFINITY;
    for _ in 0..POLYGONS_PER_PAIR {
        let modes: Vec<f64> = (0..3)
            .map(|_| rng.gen_range(0.02..0.08) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
            .collect();
        let bumped: Vec<Point<2>> = base
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let s = i as f64 / POLYGON_NODES as f64;
                let bump: f64 =
                    modes.iter().enumerate().map(|(m, c)| c * ((m + 1) as f64 * std::f64::consts::PI * s).sin()).sum();
                // shrink toward the center so the polygon stays in M
                p * (1.0 - bump.abs()) + Point::<2>::new(-p[1], p[0]) * bump
            })
            .collect();
        excess = excess.min(polygon_action(sys, &bumped)? - reference);
    }
    Ok(excess)
}

pub(super) fn action(run: &mut Run) -> Result<()> {
    run.require_dim(ExperimentKind::Action, &[2])?;
    let sys = run.system::<2>()?;
    let opts = run.opts();
    let k = sys.k;
    let b = run.spec.model.field;
    let table = boundary_action_table(&sys, run.sampling().table, &opts)?;
    for (i, j, e) in &table.failures {
        run.note(format!("entry ({i}, {j}): {e}"));
    }
    run.check(Check::at_most("shooting_failures", table.failures.len() as f64, 0.0, "all entries converge"));

    if planar(run) && b == 0.0 {
        let mut worst = 0.0f64;
        for i in 0..table.n() {
            for j in 0..table.n() {
                if i != j {
                    let chord = (table.points[i] - table.points[j]).norm();
                    worst = worst.max((table.values[i][j] - (2.0 * k).sqrt() * chord).abs());
                }
            }
        }
        run.check(Check::at_most("table_chord_oracle", worst, CHORD_ORACLE_TOL, "sqrt(2k)|x - y|"));
    }

    let mut pair_err = 0.0f64;
    let mut excess = f64::INFINITY;
    for _ in 0..run.sampling().pairs {
        let (x, y) = random_boundary_pair(&sys.domain, &mut run.rng);
        let a = mane_potential(&sys, &x, &y, &opts)?;
        if planar(run) {
            let arc = planar_exit(run.spec.radius, b, &x, &a.initial_velocity);
            pair_err = pair_err.max((arc.point - y).norm()).max((a.value - arc.action(k)).abs());
        }
        excess = excess.min(minimality_excess(&sys, &a, &mut run.rng)?);
    }
    if planar(run) && run.sampling().pairs > 0 {
        let name = if b == 0.0 { "pair_chord_oracle" } else { "pair_arc_oracle" };
        run.check(Check::at_most(name, pair_err, CHORD_ORACLE_TOL, "closed-form endpoint and action"));
    }
    if run.sampling().pairs > 0 {
        run.check(Check::above(
            "minimality_excess",
            excess,
            0.0,
            "bumped polygons cost more than the shot curve",
        ));
    }

    let asymmetry = table.asymmetry();
    if b != 0.0 {
        run.check(Check::above("asymmetry", asymmetry, 0.0, "magnetic systems are not reversible"));
    } else {
        run.note(format!("asymmetry {asymmetry:e}"));
    }
    run.file("action_table", table_csv(&table.params, &table.values));
    Ok(())
}

pub(super) fn reduce_check(run: &mut Run) -> Result<()> {
    run.require_dim(ExperimentKind::ReduceCheck, &[2])?;
    let sys = run.system::<2>()?;
    let opts = run.opts();
    let reduced = reduce(&sys);

    let mut metric = 0.0f64;
    for x in sys.domain.interior_samples(run.sampling().interior, 0.0) {
        let expected = sys.fields.metric(&x) * (2.0 * (sys.k - sys.fields.potential(&x)));
        let rel = (reduced.fields.metric(&x) - expected).amax() / expected.amax();
        metric = metric.max(rel);
    }
    run.check(Check::at_most("reduced_metric", metric, REDUCED_METRIC_TOL, "G = 2(k - U) g, relative"));

    let (mut speed, mut action_gap) = (0.0f64, 0.0f64);
    for (p, u) in ray_fan(&sys, run.sampling().rays) {
        let state = PhaseState::velocity(p, sphere_lift(&sys, &p, &u)?);
        let (traj, _) = integrate_to_exit(&sys, Formulation::Lagrangian, &state, &opts)?;
        let (curve, red) = reparametrize_to_reduced(&sys, &traj)?;
        speed = speed.max(curve.unit_speed_defect(&red, run.sampling().curve_samples)?);
        action_gap = action_gap.max((magnetic_action_along(&red, &curve)? - action_along(&traj)?).abs());
    }
    run.check(Check::at_most("unit_speed_defect", speed, UNIT_SPEED_TOL, "|gamma'|_G = 1"));
    run.check(Check::at_most("curve_action_gap", action_gap, REDUCTION_ACTION_TOL, "action along the reduced curve"));

    let t1 = boundary_action_table(&sys, run.sampling().table, &opts)?;
    let t2 = boundary_action_table(&reduced, run.sampling().table, &opts)?;
    let failures = t1.failures.len() + t2.failures.len();
    run.check(Check::at_most("shooting_failures", failures as f64, 0.0, "all entries converge"));
    run.check(Check::at_most(
        "table_difference",
        t1.max_difference(&t2),
        REDUCTION_ACTION_TOL,
        "boundary action table of the reduction",
    ));
    let mut csv = CsvTable::with_header(&["i", "j", "action", "reduced_action"]);
    for i in 0..t1.n() {
        for j in 0..t1.n() {
            if i != j {
                csv.rows.push(vec![i as f64, j as f64, t1.values[i][j], t2.values[i][j]]);
            }
        }
    }
    run.file("reduction", csv);
    Ok(())
}

pub(super) fn convexity(run: &mut Run) -> Result<()> {
    match run.spec.dim {
        2 => convexity_in::<2>(run),
        _ => convexity_in::<3>(run),
    }
}

fn convexity_in<const D: usize>(run: &mut Run) -> Result<()> {
    let sys = run.system::<D>()?;
    let n = run.sampling().convexity_points;
    let samples = sample_convexity_margins(&sys, n, 2)?;
    let mut header: Vec<String> = (1..=D).map(|i| format!("x{i}")).collect();
    header.extend((1..=D).map(|i| format!("v{i}")));
    header.push("margin".into());
    let mut table = CsvTable { header: Some(header), ..CsvTable::default() };
    for s in &samples {
        let mut row: Vec<f64> = s.x.iter().copied().collect();
        row.extend(s.v.iter());
        row.push(s.margin);
        table.rows.push(row);
    }
    run.note(format!("{} margin samples", samples.len()));
    run.check(Check::above("min_margin", min_of(samples.iter().map(|s| s.margin)), 0.0, "strict MP-convexity"));

    let mut dented = run.spec.clone();
    dented.set_param("dent_depth", run.sampling().dent_depth)?;
    let control = dented.build_with_mode::<D>(run.scenario.mode())?;
    let control_samples = sample_convexity_margins(&control, n, 2)?;
    let control_min = min_of(control_samples.iter().map(|s| s.margin));
    run.check(Check::below("dented_min_margin", control_min, 0.0, "dented control domain is not convex"));
    run.file("convexity", table);
    Ok(())
}
