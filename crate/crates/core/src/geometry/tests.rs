use std::sync::Arc;

use super::*;
use crate::catalog::DiskModel;
use crate::fd;

fn disk(model: DiskModel, mode: DerivativeMode) -> ScenarioFields<2> {
    ScenarioFields::new(Arc::new(model)).with_mode(mode)
}

fn conformal(a: f64) -> DiskModel {
    DiskModel { conformal: a, ..DiskModel::flat() }
}

/// `λ = a(1 - |x|²)` and its gradient.
fn lambda(a: f64, x: &Point<2>) -> (f64, Point<2>) {
    (a * (1.0 - x.norm_squared()), x * (-2.0 * a))
}

fn unit_disk() -> ChartDomain<2> {
    ChartDomain::ball(1.0).unwrap()
}

#[test]
fn flat_metric_is_identity_and_christoffel_vanishes() {
    let f = disk(DiskModel::flat(), DerivativeMode::default());
    let x = Point::<2>::new(0.3, 0.1);
    assert_eq!(metric_at(&f, &x).unwrap(), Mat::<2>::identity());
    for g in christoffel_at(&f, &x).unwrap() {
        assert!(g.amax() < 1e-12);
    }
}

#[test]
fn conformal_metric_is_identity_where_lambda_vanishes() {
    // λ vanishes on |x| = 1, so g = δ there.
    let f = disk(conformal(0.3), DerivativeMode::Analytic);
    let x = Point::<2>::new(0.6, 0.8);
    assert!((metric_at(&f, &x).unwrap() - Mat::<2>::identity()).amax() < 1e-14);
}

#[test]
fn conformal_christoffel_closed_form() {
    let a = 0.2;
    for mode in [DerivativeMode::Analytic, DerivativeMode::default()] {
        let f = disk(conformal(a), mode);
        for x in unit_disk().interior_samples(50, 0.0) {
            let (_, dl) = lambda(a, &x);
            let gamma = christoffel_at(&f, &x).unwrap();
            let expected = [
                Mat::<2>::new(dl[0], dl[1], dl[1], -dl[0]),
                Mat::<2>::new(-dl[1], dl[0], dl[0], dl[1]),
            ];
            for i in 0..2 {
                assert!((gamma[i] - expected[i]).amax() < 1e-8, "{mode:?} {x:?}");
                assert_eq!(gamma[i], gamma[i].transpose());
            }
        }
    }
}

#[test]
fn analytic_and_finite_difference_derivatives_agree() {
    let models = [
        DiskModel::flat(),
        conformal(0.1),
        DiskModel { field: 0.5, ..DiskModel::flat() },
        DiskModel { quadratic_potential: 0.2, gaussian_amplitude: 0.1, ..conformal(0.15) },
    ];
    for model in models {
        let exact = disk(model, DerivativeMode::Analytic);
        let approx = disk(model, DerivativeMode::default());
        for x in unit_disk().interior_samples(200, 0.0) {
            let (dg_a, dg_f) = (exact.metric_partials(&x), approx.metric_partials(&x));
            for k in 0..2 {
                assert!((dg_a[k] - dg_f[k]).amax() < 1e-6);
            }
            assert!((exact.one_form_partials(&x) - approx.one_form_partials(&x)).amax() < 1e-6);
            assert!((exact.potential_gradient(&x) - approx.potential_gradient(&x)).amax() < 1e-6);
        }
    }
}

#[test]
fn lorentz_force_for_constant_field() {
    let b = 0.7;
    let f = disk(DiskModel { field: b, ..DiskModel::flat() }, DerivativeMode::default());
    let x = Point::<2>::new(0.2, -0.4);
    let omega = two_form_at(&f, &x);
    assert!((omega - Mat::<2>::new(0.0, b, -b, 0.0)).amax() < 1e-9);
    let y = lorentz_at(&f, &x).unwrap();
    assert!((y - Mat::<2>::new(0.0, -b, b, 0.0)).amax() < 1e-9);
    // Ω(u, v) = <Y u, v>
    let (u, v) = (Point::<2>::new(1.0, 0.3), Point::<2>::new(-0.2, 0.9));
    assert!((inner(&omega, &u, &v) - (y * u).dot(&v)).abs() < 1e-9);
}

#[test]
fn zero_one_form_gives_zero_lorentz_force() {
    let f = disk(conformal(0.2), DerivativeMode::default());
    assert!(lorentz_at(&f, &Point::<2>::new(0.1, 0.2)).unwrap().amax() < 1e-12);
}

#[test]
fn lorentz_force_is_metric_antisymmetric() {
    let model = DiskModel { field: 0.8, conformal: 0.3, quadratic_potential: 0.1, ..DiskModel::flat() };
    let f = disk(model, DerivativeMode::default());
    let samples = unit_disk().interior_samples(100, 0.0);
    for (i, x) in samples.iter().enumerate() {
        let g = metric_at(&f, x).unwrap();
        let y = lorentz_at(&f, x).unwrap();
        let gy = g * y;
        assert!((gy + gy.transpose()).amax() < 1e-8);
        let omega = two_form_at(&f, x);
        assert!((omega + omega.transpose()).amax() == 0.0);
        let v = Point::<2>::new((i as f64).cos(), (i as f64 * 1.3).sin());
        assert!(inner(&g, &(y * v), &v).abs() < 1e-8);
    }
}

struct Twisted3;

impl FieldModel<3> for Twisted3 {
    fn metric(&self, x: &Point<3>) -> Mat<3> {
        Mat::<3>::identity() * (1.0 + 0.1 * x.norm_squared())
    }

    fn one_form(&self, x: &Point<3>) -> Point<3> {
        Point::<3>::new((x[1] * x[2]).sin(), x[0] * x[0], x[0] * x[1] * x[2]) + Point::<3>::new(-x[1], x[0], 0.0) * 0.25
    }

    fn potential(&self, _x: &Point<3>) -> f64 {
        0.0
    }
}

#[test]
fn two_form_is_closed_in_three_dimensions() {
    let f = ScenarioFields::new(Arc::new(Twisted3));
    let domain = ChartDomain::<3>::ball(1.0).unwrap();
    for x in domain.interior_samples(40, 0.1) {
        let d: [Mat<3>; 3] = std::array::from_fn(|i| fd::partial(&|y: &Point<3>| two_form_at(&f, y), &x, i, 1e-3));
        let cyclic = d[0][(1, 2)] + d[1][(2, 0)] + d[2][(0, 1)];
        assert!(cyclic.abs() < 1e-6, "{cyclic}");
    }
}

#[test]
fn unit_disk_normal() {
    let f = disk(DiskModel::flat(), DerivativeMode::default());
    let nu = inward_normal_at(&f, &unit_disk(), &Point::<2>::new(1.0, 0.0)).unwrap();
    assert!((nu - Point::<2>::new(-1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn conformal_normal_closed_form() {
    // At (1, 0) λ = 0, so scale with a radius-2 ball where λ(2, 0) = -3a.
    let a = 0.1;
    let f = disk(conformal(a), DerivativeMode::default());
    let domain = ChartDomain::<2>::ball(2.0).unwrap();
    let x = Point::<2>::new(2.0, 0.0);
    let (l, _) = lambda(a, &x);
    let nu = inward_normal_at(&f, &domain, &x).unwrap();
    assert!((nu - Point::<2>::new(-(-l).exp(), 0.0)).norm() < 1e-12);
}

#[test]
fn normals_are_unit_and_inward() {
    let model = DiskModel { conformal: 0.2, field: 0.3, ..DiskModel::flat() };
    let f = disk(model, DerivativeMode::default());
    for domain in [unit_disk(), ChartDomain::dented_ball(1.0, 0.25, 0.3).unwrap()] {
        for p in domain.boundary_grid(50) {
            let nu = inward_normal_at(&f, &domain, &p).unwrap();
            let g = metric_at(&f, &p).unwrap();
            assert!((inner(&g, &nu, &nu) - 1.0).abs() < 1e-10);
            assert!(domain.rho_gradient(&p).dot(&nu) > 0.0);
        }
    }
}

#[test]
fn normal_requires_a_boundary_point() {
    let f = disk(DiskModel::flat(), DerivativeMode::default());
    assert!(inward_normal_at(&f, &unit_disk(), &Point::<2>::new(0.5, 0.0)).is_err());
}

#[test]
fn second_fundamental_form_of_round_disks() {
    let f = disk(DiskModel::flat(), DerivativeMode::default());
    let p = Point::<2>::new(0.0, 1.0);
    let v = Point::<2>::new(1.0, 0.0);
    assert!((second_fundamental_form_at(&f, &unit_disk(), &p, &v).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(second_fundamental_form_at(&f, &unit_disk(), &p, &Point::<2>::zeros()).unwrap(), 0.0);
    let big = ChartDomain::<2>::ball(2.0).unwrap();
    let q = Point::<2>::new(0.0, 2.0);
    assert!((second_fundamental_form_at(&f, &big, &q, &v).unwrap() - 0.5).abs() < 1e-12);
    // The normal part of v is projected away.
    let w = Point::<2>::new(1.0, 5.0);
    assert!((second_fundamental_form_at(&f, &unit_disk(), &p, &w).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn second_fundamental_form_is_quadratic() {
    let f = disk(conformal(0.2), DerivativeMode::default());
    let p = unit_disk().boundary_point(&[0.7]);
    let t = Point::<2>::new(-p[1], p[0]);
    let one = second_fundamental_form_at(&f, &unit_disk(), &p, &t).unwrap();
    let three = second_fundamental_form_at(&f, &unit_disk(), &p, &(t * 3.0)).unwrap();
    assert!((three - 9.0 * one).abs() < 1e-10);
}

#[test]
fn gradient_of_potential() {
    let zero = disk(DiskModel::flat(), DerivativeMode::default());
    assert_eq!(grad_at(&zero, &Point::<2>::new(0.1, 0.2)).unwrap().norm(), 0.0);

    // U = |x|²/2 as u0 (1 - |x|²) + const with u0 = -1/2.
    let bowl = DiskModel { quadratic_potential: -0.5, ..DiskModel::flat() };
    let x = Point::<2>::new(0.5, 0.0);
    let flat = disk(bowl, DerivativeMode::default());
    assert!((grad_at(&flat, &x).unwrap() - x).norm() < 1e-10);

    let a = 0.3;
    let conf = disk(DiskModel { conformal: a, ..bowl }, DerivativeMode::default());
    let (l, _) = lambda(a, &x);
    assert!((grad_at(&conf, &x).unwrap() - x * (-2.0 * l).exp()).norm() < 1e-10);
}
