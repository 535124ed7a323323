//! Constant-field disk against closed-form circular arcs.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use mpflow_core::action::{mane_potential, shoot};
use mpflow_core::catalog::DiskModel;
use mpflow_core::flow::{scattering, FlowOptions};
use mpflow_core::{ChartDomain, MpSystem, Point, ScenarioFields};

fn field_system(b: f64) -> MpSystem<2> {
    let model = DiskModel { field: b, ..DiskModel::flat() };
    MpSystem::new(ChartDomain::ball(1.0).unwrap(), ScenarioFields::new(Arc::new(model)), 0.5).unwrap()
}

fn e(phi: f64) -> Point<2> {
    Point::<2>::new(phi.cos(), phi.sin())
}

fn perp(v: &Point<2>) -> Point<2> {
    Point::<2>::new(-v[1], v[0])
}

/// Unit-speed arc through `p` with velocity `v` under `v' = B J v`.
struct Arc2 {
    center: Point<2>,
    radius: f64,
    b: f64,
    phi0: f64,
}

impl Arc2 {
    fn new(p: &Point<2>, v: &Point<2>, b: f64) -> Self {
        let radius = v.norm() / b;
        let center = p + perp(&v.normalize()) * radius;
        let rel = p - center;
        Self { center, radius, b, phi0: rel[1].atan2(rel[0]) }
    }

    /// Angle swept until the arc meets the unit circle again.
    fn sweep(&self) -> f64 {
        let c = self.center;
        let rhs = (1.0 - c.norm_squared() - self.radius * self.radius) / (2.0 * self.radius);
        let psi = c[1].atan2(c[0]);
        let w = (rhs / c.norm()).clamp(-1.0, 1.0).acos();
        [psi + w, psi - w]
            .iter()
            .map(|root| (root - self.phi0).rem_euclid(TAU))
            .map(|d| if !(1e-9..=TAU - 1e-9).contains(&d) { TAU } else { d })
            .fold(f64::INFINITY, f64::min)
    }

    fn point(&self, dphi: f64) -> Point<2> {
        self.center + e(self.phi0 + dphi) * self.radius
    }

    fn velocity(&self, dphi: f64) -> Point<2> {
        perp(&e(self.phi0 + dphi)) * (self.radius * self.b)
    }

    /// `T - ∫α` at `k = 1/2` with `α = (B/2)(-y, x)`.
    fn action(&self, dphi: f64) -> f64 {
        let (p0, p1) = (self.phi0, self.phi0 + dphi);
        let c = self.center;
        let moment = c[0] * (p1.sin() - p0.sin()) - c[1] * (p1.cos() - p0.cos());
        let flux = 0.5 * self.b * self.radius * (self.radius * dphi + moment);
        dphi / self.b - flux
    }
}

fn rays(n: usize) -> Vec<(Point<2>, Point<2>)> {
    (0..n)
        .map(|i| {
            let theta = TAU * i as f64 / n as f64;
            let tilt = 1.2 * (2.0 * ((i as f64 + 0.5) * 0.618_033_988_749_895).fract() - 1.0);
            let p = e(theta);
            (p, e(theta + PI + tilt))
        })
        .collect()
}

#[test]
fn scattering_follows_larmor_arcs() {
    for b in [0.1, 0.5] {
        let sys = field_system(b);
        for (p, u) in rays(20) {
            let rec = scattering(&sys, &p, &u, &FlowOptions::default()).unwrap();
            let arc = Arc2::new(&p, &rec.entry_velocity, b);
            let dphi = arc.sweep();
            assert!((rec.exit_point - arc.point(dphi)).norm() < 1e-7, "B={b} p={p:?}");
            assert!((rec.exit_velocity - arc.velocity(dphi)).norm() < 1e-7);
            assert!((rec.tau - dphi / b).abs() < 1e-7);
            assert!((rec.action - arc.action(dphi)).abs() < 1e-7);
        }
    }
}

#[test]
fn trajectory_stays_on_the_circle() {
    let sys = field_system(1.0);
    let p = Point::<2>::new(-0.5, 0.0);
    let v = Point::<2>::new(0.0, 1.0);
    let traj = mpflow_core::flow::integrate(
        &sys,
        mpflow_core::Formulation::Lagrangian,
        &mpflow_core::PhaseState::velocity(p, v),
        1.0,
        &FlowOptions::default(),
    )
    .unwrap();
    let arc = Arc2::new(&p, &v, 1.0);
    for i in 0..=50 {
        let t = i as f64 / 50.0;
        assert!(((traj.point_at(t) - arc.center).norm() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn shooting_recovers_the_arc_tangent() {
    for b in [0.1, 0.5] {
        let sys = field_system(b);
        for (p, u) in rays(8) {
            let rec = scattering(&sys, &p, &u, &FlowOptions::default()).unwrap();
            let shot = shoot(&sys, &p, &rec.exit_point, &FlowOptions::default()).unwrap();
            assert!((shot.velocity - rec.entry_velocity).norm() < 1e-7);
            let a = mane_potential(&sys, &p, &rec.exit_point, &FlowOptions::default()).unwrap();
            let arc = Arc2::new(&p, &rec.entry_velocity, b);
            assert!((a.value - arc.action(arc.sweep())).abs() < 1e-7);
        }
    }
}
