//! Cross-checks between flow formulations and time changes.

use std::sync::Arc;

use mpflow_core::catalog::{DiskModel, ScenarioKey, ScenarioSpec};
use mpflow_core::flow::{
    integrate, integrate_tilde_to_exit, integrate_to_exit, ray_fan, time_change, FlowOptions,
};
use mpflow_core::geometry::Constant;
use mpflow_core::systems::{energy, sphere_lift, PotentialFactor};
use mpflow_core::{ChartDomain, Formulation, MpSystem, PhaseState, Point, Representation, ScalarField, ScenarioFields};

fn disk(model: DiskModel, k: f64) -> MpSystem<2> {
    MpSystem::new(ChartDomain::ball(1.0).unwrap(), ScenarioFields::new(Arc::new(model)), k).unwrap()
}

fn flat_field() -> MpSystem<2> {
    disk(DiskModel { field: 0.5, ..DiskModel::flat() }, 0.5)
}

fn conformal_potential() -> MpSystem<2> {
    disk(DiskModel { conformal: 0.1, quadratic_potential: 0.2, gaussian_amplitude: 0.1, ..DiskModel::flat() }, 1.0)
}

fn inbound(sys: &MpSystem<2>, n: usize) -> Vec<PhaseState<2>> {
    ray_fan(sys, n)
        .into_iter()
        .map(|(p, u)| PhaseState::velocity(p, sphere_lift(sys, &p, &u).unwrap()))
        .collect()
}

#[test]
fn energy_is_conserved_on_every_catalog_scenario() {
    for key in ScenarioKey::ALL {
        let sys = ScenarioSpec::new(key).build::<2>().unwrap();
        for s in inbound(&sys, 20) {
            let (traj, _) = integrate_to_exit(&sys, Formulation::Lagrangian, &s, &FlowOptions::default()).unwrap();
            assert!(traj.max_energy_drift() <= 1e-8, "{key}: {}", traj.max_energy_drift());
        }
    }
}

#[test]
fn four_formulations_trace_the_same_curves() {
    for sys in [flat_field(), conformal_potential()] {
        for s in inbound(&sys, 6) {
            let (reference, exit) =
                integrate_to_exit(&sys, Formulation::Lagrangian, &s, &FlowOptions::default()).unwrap();
            for formulation in Formulation::ALL {
                let start = PhaseState::from_velocity(&sys.fields, s.x, s.w, formulation.representation());
                let traj = integrate(&sys, formulation, &start, exit.tau, &FlowOptions::default()).unwrap();
                for i in 0..=100 {
                    let t = exit.tau * i as f64 / 100.0;
                    let d = (traj.point_at(t) - reference.point_at(t)).norm();
                    assert!(d <= 1e-6, "{}: {d:e}", formulation.name());
                }
            }
        }
    }
}

#[test]
fn hamiltonian_curves_carry_mp_velocities() {
    let sys = conformal_potential();
    for s in inbound(&sys, 5) {
        for formulation in [Formulation::TwistedCotangent, Formulation::Canonical] {
            let start = s.to_representation(&sys.fields, formulation.representation()).unwrap();
            let (traj, _) = integrate_to_exit(&sys, formulation, &start, &FlowOptions::default()).unwrap();
            for t in traj.step_times() {
                let x = traj.point_at(t);
                let xdot = traj.base_velocity_at(t).unwrap();
                assert!((energy(&sys, &x, &xdot) - sys.k).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn tilde_flows_are_time_changes() {
    let sys = conformal_potential();
    let factors: Vec<Arc<dyn ScalarField<2>>> = vec![
        Arc::new(Constant(2.0)),
        Arc::new(PotentialFactor::hat(&sys)),
        Arc::new(PotentialFactor::reduced(&sys)),
    ];
    for mu in factors {
        for s in inbound(&sys, 4) {
            let canon = s.to_representation(&sys.fields, Representation::CanonicalMomentum).unwrap();
            let (tilde, exit) = integrate_tilde_to_exit(&sys, mu.clone(), &canon, &FlowOptions::default()).unwrap();
            let beta = time_change(&tilde, mu.clone());
            let (plain, plain_exit) =
                integrate_to_exit(&sys, Formulation::Lagrangian, &s, &FlowOptions::default()).unwrap();
            assert!((beta.total() - plain_exit.tau).abs() < 1e-6);
            for i in 0..=50 {
                let s_i = exit.tau * i as f64 / 50.0;
                let t = beta.beta(s_i).min(plain_exit.tau);
                assert!((tilde.point_at(s_i) - plain.point_at(t)).norm() <= 1e-6);
            }
        }
    }
}

#[test]
fn chord_in_the_flat_disk() {
    let sys = disk(DiskModel::flat(), 2.0);
    let x0 = Point::<2>::new(-1.0, 0.0);
    let v = sphere_lift(&sys, &x0, &Point::<2>::new(1.0, 0.0)).unwrap();
    let (traj, exit) =
        integrate_to_exit(&sys, Formulation::Lagrangian, &PhaseState::velocity(x0, v), &FlowOptions::default()).unwrap();
    assert!((exit.tau - 1.0).abs() < 1e-12);
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        assert!((traj.point_at(t) - (x0 + v * t)).norm() < 1e-9);
    }
}
