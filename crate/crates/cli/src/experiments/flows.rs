use std::sync::Arc;

use rand::Rng;

use mpflow_core::flow::{integrate, integrate_tilde_to_exit, integrate_to_exit, ray_fan, time_change as beta_of};
use mpflow_core::geometry::{inner, Constant};
use mpflow_core::systems::{energy, hamiltonian, legendre, sphere_lift, PotentialFactor};
use mpflow_core::{Formulation, HamiltonianSpec, MpSystem, PhaseState, Point, ScalarField};

use super::{max_of, Run};
use crate::config::ExperimentKind;
use crate::error::Result;
use crate::output::CsvTable;
use crate::report::Check;

const ENERGY_DRIFT_TOL: f64 = 1e-8;
const FOUR_FLOW_TOL: f64 = 1e-6;
const HAMILTONIAN_CURVE_TOL: f64 = 1e-9;
const TIME_CHANGE_TOL: f64 = 1e-6;
const TABLE_IDENTITY_TOL: f64 = 1e-12;
const ON_LEVEL_TOL: f64 = 1e-10;
const LEVEL_EQUIVALENCE_TOL: f64 = 1e-9;

fn inbound<const D: usize>(sys: &MpSystem<D>, n: usize) -> Result<Vec<PhaseState<D>>> {
    ray_fan(sys, n)
        .into_iter()
        .map(|(p, u)| Ok(PhaseState::velocity(p, sphere_lift(sys, &p, &u)?)))
        .collect()
}

fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

pub(super) fn simulate(run: &mut Run) -> Result<()> {
    match run.spec.dim {
        2 => simulate_in::<2>(run),
        _ => simulate_in::<3>(run),
    }
}

fn simulate_in<const D: usize>(run: &mut Run) -> Result<()> {
    let sys = run.system::<D>()?;
    let opts = run.opts();
    let mut header = vec!["ray".to_string(), "t".to_string()];
    header.extend(axis_names("x", D));
    header.extend(axis_names("v", D));
    header.push("energy_drift".into());
    let mut table = CsvTable { header: Some(header), ..CsvTable::default() };
    let mut drifts = Vec::new();
    let mut failures = 0usize;
    for (i, s) in inbound(&sys, run.sampling().rays)?.iter().enumerate() {
        match integrate_to_exit(&sys, Formulation::Lagrangian, s, &opts) {
            Ok((traj, _)) => {
                drifts.push(traj.max_energy_drift());
                for (t, drift) in &traj.energy_drift {
                    let st = traj.state_at(*t);
                    let mut row = vec![i as f64, *t];
                    row.extend(st.x.iter());
                    row.extend(st.w.iter());
                    row.push(*drift);
                    table.rows.push(row);
                }
            }
            Err(e) => {
                failures += 1;
                run.note(format!("ray {i}: {e}"));
            }
        }
    }
    run.check(Check::at_most("energy_drift", max_of(drifts), ENERGY_DRIFT_TOL, "E(x(0), v(0))"));
    run.check(Check::at_most("exit_failures", failures as f64, 0.0, "every ray exits"));
    run.file("trajectories", table);
    Ok(())
}

pub(super) fn flows_compare(run: &mut Run) -> Result<()> {
    match run.spec.dim {
        2 => flows_compare_in::<2>(run),
        _ => flows_compare_in::<3>(run),
    }
}

fn flows_compare_in<const D: usize>(run: &mut Run) -> Result<()> {
    let sys = run.system::<D>()?;
    let opts = run.opts();
    let samples = run.sampling().curve_samples.max(1);
    let mut table = CsvTable::with_header(&["ray", "formulation", "max_deviation"]);
    run.note("formulation index: 0 lagrangian, 1 symplectic-tangent, 2 twisted-cotangent, 3 canonical");
    let mut worst = 0.0f64;
    for (i, s) in inbound(&sys, run.sampling().rays)?.iter().enumerate() {
        let (reference, exit) = integrate_to_exit(&sys, Formulation::Lagrangian, s, &opts)?;
        for (j, formulation) in Formulation::ALL.iter().enumerate() {
            let start = PhaseState::from_velocity(&sys.fields, s.x, s.w, formulation.representation());
            let traj = integrate(&sys, *formulation, &start, exit.tau, &opts)?;
            let dev = max_of((0..=samples).map(|m| {
                let t = exit.tau * m as f64 / samples as f64;
                (traj.point_at(t) - reference.point_at(t)).norm()
            }));
            worst = worst.max(dev);
            table.rows.push(vec![i as f64, j as f64, dev]);
        }
    }
    run.check(Check::at_most("four_flow_max_deviation", worst, FOUR_FLOW_TOL, "lagrangian base curve"));
    run.file("flows", table);
    Ok(())
}

fn elliptic_factors<const D: usize>(sys: &MpSystem<D>) -> Vec<(&'static str, Arc<dyn ScalarField<D>>)> {
    vec![
        ("mu=2", Arc::new(Constant(2.0))),
        ("mu=k/(k-U)", Arc::new(PotentialFactor::hat(sys))),
        ("mu=1/(2(k-U))", Arc::new(PotentialFactor::reduced(sys))),
    ]
}

pub(super) fn time_change(run: &mut Run) -> Result<()> {
    run.require_dim(ExperimentKind::TimeChange, &[2, 3])?;
    match run.spec.dim {
        2 => time_change_in::<2>(run),
        _ => time_change_in::<3>(run),
    }
}

fn time_change_in<const D: usize>(run: &mut Run) -> Result<()> {
    let sys = run.system::<D>()?;
    let opts = run.opts();
    let samples = run.sampling().curve_samples.max(1);
    let rays = inbound(&sys, run.sampling().rays)?;

    let mut identity = 0.0f64;
    for s in &rays {
        let start = s.to_representation(&sys.fields, Formulation::Canonical.representation())?;
        let (traj, _) = integrate_to_exit(&sys, Formulation::Canonical, &start, &opts)?;
        for t in traj.step_times() {
            let x = traj.point_at(t);
            let xdot = traj.base_velocity_at(t)?;
            identity = identity.max((energy(&sys, &x, &xdot) - sys.k).abs());
        }
    }
    run.check(Check::at_most(
        "hamiltonian_curve_energy",
        identity,
        HAMILTONIAN_CURVE_TOL,
        "E(x, x') = k along canonical H-flow, at step ends",
    ));

    let mut table = CsvTable::with_header(&["ray", "mu", "sup_distance", "beta_total", "tau"]);
    for (m, (name, mu)) in elliptic_factors(&sys).into_iter().enumerate() {
        run.note(format!("mu index {m}: {name}"));
        let mut worst = 0.0f64;
        for (i, s) in rays.iter().enumerate() {
            let canon = s.to_representation(&sys.fields, Formulation::Canonical.representation())?;
            let (tilde, tilde_exit) = integrate_tilde_to_exit(&sys, mu.clone(), &canon, &opts)?;
            let beta = beta_of(&tilde, mu.clone());
            let (plain, exit) = integrate_to_exit(&sys, Formulation::Lagrangian, s, &opts)?;
            let mut sup = (beta.total() - exit.tau).abs();
            for j in 0..=samples {
                let si = tilde_exit.tau * j as f64 / samples as f64;
                let t = beta.beta(si).min(exit.tau);
                sup = sup.max((tilde.point_at(si) - plain.point_at(t)).norm());
            }
            worst = worst.max(sup);
            table.rows.push(vec![i as f64, m as f64, sup, beta.total(), exit.tau]);
        }
        run.check(Check::at_most(
            format!("time_change[{name}]"),
            worst,
            TIME_CHANGE_TOL,
            "H-flow at beta(s), beta' = mu",
        ));
    }
    run.file("time_change", table);
    Ok(())
}

fn random_interior<const D: usize>(sys: &MpSystem<D>, rng: &mut impl Rng) -> Point<D> {
    let (lo, hi) = sys.domain.bbox();
    loop {
        let x = Point::<D>::from_fn(|i, _| rng.gen_range(lo[i]..hi[i]));
        if sys.domain.rho(&x) > 0.0 {
            return x;
        }
    }
}

fn random_vector<const D: usize>(rng: &mut impl Rng, scale: f64) -> Point<D> {
    Point::<D>::from_fn(|_, _| rng.gen_range(-scale..scale))
}

pub(super) fn hamiltonians(run: &mut Run) -> Result<()> {
    run.require_dim(ExperimentKind::Hamiltonians, &[2])?;
    let sys = run.system::<2>()?;
    let k = sys.k;
    let n = run.sampling().points;
    let hat = HamiltonianSpec::hat(k);
    let hat_tilde = HamiltonianSpec::tilde(Arc::new(PotentialFactor::hat(&sys)), k);
    let red = HamiltonianSpec::reduced(k);
    let red_tilde = HamiltonianSpec::tilde(Arc::new(PotentialFactor::reduced(&sys)), k);
    let standard = HamiltonianSpec::standard(k);

    let mut table = CsvTable::with_header(&["x1", "x2", "xi1", "xi2", "hat_defect", "reduced_defect"]);
    let (mut hat_err, mut red_err) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let x = random_interior(&sys, &mut run.rng);
        let xi = random_vector::<2>(&mut run.rng, 2.0);
        let a = (hamiltonian(&sys, &hat, &x, &xi)? - hamiltonian(&sys, &hat_tilde, &x, &xi)?).abs();
        let b = (hamiltonian(&sys, &red, &x, &xi)? - (hamiltonian(&sys, &red_tilde, &x, &xi)? - (k - 0.5))).abs();
        hat_err = hat_err.max(a);
        red_err = red_err.max(b);
        table.rows.push(vec![x[0], x[1], xi[0], xi[1], a, b]);
    }
    run.check(Check::at_most("hat_identity", hat_err, TABLE_IDENTITY_TOL, "H-tilde with mu = k/(k-U)"));
    run.check(Check::at_most(
        "reduced_identity",
        red_err,
        TABLE_IDENTITY_TOL,
        "H-tilde with mu = 1/(2(k-U)) minus (k - 1/2)",
    ));

    // {H = k} and {H-tilde = k} agree: points built on one are on the other,
    // and points off one are off the other.
    let factors = elliptic_factors(&sys);
    let (mut on_h, mut forward, mut backward, mut separation) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..n {
        let x = random_interior(&sys, &mut run.rng);
        let u = random_vector::<2>(&mut run.rng, 1.0);
        let v = sphere_lift(&sys, &x, &u)?;
        let xi = legendre(&sys, &x, &v);
        let h = hamiltonian(&sys, &standard, &x, &xi)?;
        on_h = on_h.max((h - k).abs());
        for (_, mu) in &factors {
            let m = mu.value(&x);
            let tilde = HamiltonianSpec::tilde(mu.clone(), k);
            forward = forward.max((hamiltonian(&sys, &tilde, &x, &xi)? - k).abs() / (1.0 + m));
            // a point built on {H-tilde = k}: same covector scaling
            let (g, g_inv) = sys.fields.checked_metric(&x)?;
            let eta = g * u;
            let scale = (2.0 * (k - sys.fields.potential(&x))).sqrt() / inner(&g_inv, &eta, &eta).sqrt();
            let xi_t = eta * scale - sys.fields.one_form(&x);
            let ht = hamiltonian(&sys, &tilde, &x, &xi_t)?;
            if (ht - k).abs() <= ON_LEVEL_TOL * (1.0 + m) {
                backward = backward.max((hamiltonian(&sys, &standard, &x, &xi_t)? - k).abs());
            } else {
                backward = f64::NAN;
            }
            let off = xi * 1.1 + sys.fields.one_form(&x) * 0.1;
            if (hamiltonian(&sys, &standard, &x, &off)? - k).abs() > 1e-3 {
                separation = separation.min((hamiltonian(&sys, &tilde, &x, &off)? - k).abs());
            }
        }
    }
    run.check(Check::at_most("on_level_h", on_h, ON_LEVEL_TOL, "H = k on lifted states"));
    run.check(Check::at_most(
        "level_set_forward",
        forward,
        LEVEL_EQUIVALENCE_TOL,
        "|H-tilde - k| / (1 + mu) on {H = k}",
    ));
    run.check(Check::at_most("level_set_backward", backward, ON_LEVEL_TOL, "|H - k| on {H-tilde = k}"));
    run.check(Check::above("level_set_separation", separation, 1e-3, "off {H = k} implies off {H-tilde = k}"));
    run.file("hamiltonians", table);
    Ok(())
}
