use std::sync::Arc;

use super::*;
use crate::catalog::DiskModel;
use crate::geometry::{Constant, DerivativeMode, FnScalar};

fn system(model: DiskModel, k: f64) -> MpSystem<2> {
    let fields = ScenarioFields::new(Arc::new(model));
    MpSystem::new(ChartDomain::ball(1.0).unwrap(), fields, k).unwrap()
}

fn flat(k: f64) -> MpSystem<2> {
    system(DiskModel::flat(), k)
}

fn rich() -> MpSystem<2> {
    let model = DiskModel {
        conformal: 0.15,
        field: 0.4,
        quadratic_potential: 0.2,
        gaussian_amplitude: 0.1,
        gaussian_width: 0.4,
    };
    system(model, 1.0)
}

fn phase_samples(sys: &MpSystem<2>, n: usize) -> Vec<(Point<2>, Point<2>)> {
    sys.domain
        .interior_samples(n, 0.0)
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let t = i as f64 * 0.91;
            (x, Point::<2>::new(t.cos(), t.sin()) * (0.3 + (i % 7) as f64 * 0.2))
        })
        .collect()
}

#[test]
fn energy_examples() {
    let sys = flat(0.5);
    assert_eq!(energy(&sys, &Point::<2>::new(0.1, 0.2), &Point::<2>::new(1.0, 0.0)), 0.5);
    // U = -(1 - |x|²) vanishes on the boundary; at the origin U = -1.
    let bowl = system(DiskModel { quadratic_potential: -1.0, ..DiskModel::flat() }, 0.5);
    let u0 = bowl.fields.potential(&Point::<2>::zeros());
    assert_eq!(energy(&bowl, &Point::<2>::zeros(), &Point::<2>::new(0.0, 1.0)), 0.5 + u0);
}

#[test]
fn standing_assumption_is_enforced() {
    let model = DiskModel { quadratic_potential: 0.4, ..DiskModel::flat() };
    let fields = ScenarioFields::<2>::new(Arc::new(model));
    let err = MpSystem::new(ChartDomain::ball(1.0).unwrap(), fields.clone(), 0.4).unwrap_err();
    assert!(matches!(err, MpError::BelowPotential { .. }));
    assert!(MpSystem::new(ChartDomain::ball(1.0).unwrap(), fields, 0.41).is_ok());
}

#[test]
fn flat_standard_hamiltonian() {
    for k in [0.5, 3.0] {
        let sys = flat(k);
        let h = hamiltonian(&sys, &HamiltonianSpec::standard(k), &Point::<2>::zeros(), &Point::<2>::new(1.0, 0.0));
        assert_eq!(h.unwrap(), 0.5);
    }
}

#[test]
fn tilde_without_mu_is_a_config_error() {
    let sys = flat(0.5);
    let spec = HamiltonianSpec { kind: HamiltonianKind::Tilde, mu: None, k: 0.5 };
    let err = hamiltonian(&sys, &spec, &Point::<2>::zeros(), &Point::<2>::zeros()).unwrap_err();
    assert!(matches!(err, MpError::Config(_)));
}

#[test]
fn hamiltonian_table_identities() {
    let sys = rich();
    let k = sys.k;
    let hat_mu: Arc<dyn ScalarField<2>> = Arc::new(PotentialFactor::hat(&sys));
    let red_mu: Arc<dyn ScalarField<2>> = Arc::new(PotentialFactor::reduced(&sys));
    for (x, xi) in phase_samples(&sys, 100) {
        let hat = hamiltonian(&sys, &HamiltonianSpec::hat(k), &x, &xi).unwrap();
        let tilde_hat = hamiltonian(&sys, &HamiltonianSpec::tilde(hat_mu.clone(), k), &x, &xi).unwrap();
        assert!((hat - tilde_hat).abs() < 1e-12);
        let red = hamiltonian(&sys, &HamiltonianSpec::reduced(k), &x, &xi).unwrap();
        let tilde_red = hamiltonian(&sys, &HamiltonianSpec::tilde(red_mu.clone(), k), &x, &xi).unwrap();
        assert!((red - (tilde_red - (k - 0.5))).abs() < 1e-12);
        let one = hamiltonian(&sys, &HamiltonianSpec::tilde(Arc::new(Constant(1.0)), k), &x, &xi).unwrap();
        let h = hamiltonian(&sys, &HamiltonianSpec::standard(k), &x, &xi).unwrap();
        assert!((one - h).abs() < 1e-12);
    }
}

#[test]
fn level_sets_coincide() {
    let sys = rich();
    let k = sys.k;
    let mu: Arc<dyn ScalarField<2>> = Arc::new(FnScalar::new(|x: &Point<2>| 1.0 + 0.5 * x[0] * x[0] + 0.3 * x[1]));
    let max_mu = 1.8;
    for (x, v) in phase_samples(&sys, 100) {
        let v = sphere_lift(&sys, &x, &v).unwrap();
        let xi = legendre(&sys, &x, &v);
        let h = hamiltonian(&sys, &HamiltonianSpec::standard(k), &x, &xi).unwrap();
        assert!((h - k).abs() <= 1e-10);
        let ht = hamiltonian(&sys, &HamiltonianSpec::tilde(mu.clone(), k), &x, &xi).unwrap();
        assert!((ht - k).abs() <= 1e-9 * (1.0 + max_mu));
        // Off the level set both move away from k.
        let off = xi * 1.1;
        let h = hamiltonian(&sys, &HamiltonianSpec::standard(k), &x, &off).unwrap();
        let ht = hamiltonian(&sys, &HamiltonianSpec::tilde(mu.clone(), k), &x, &off).unwrap();
        assert!((h - k).abs() > 1e-6 && (ht - k).abs() > 1e-6);
    }
}

#[test]
fn legendre_examples_and_roundtrip() {
    let sys = flat(0.5);
    let v = Point::<2>::new(0.3, -0.7);
    assert_eq!(legendre(&sys, &Point::<2>::new(0.2, 0.1), &v), v);

    // α = (B/2)(-y, x) is (0.5, 0) at (0, -1) for B = 1.
    let b = 1.0;
    let mag = system(DiskModel { field: b, ..DiskModel::flat() }, 0.5);
    let x = Point::<2>::new(0.0, -1.0);
    let alpha = mag.fields.one_form(&x);
    assert!((alpha - Point::<2>::new(0.5, 0.0)).norm() < 1e-15);
    assert!((legendre(&mag, &x, &Point::<2>::new(1.0, 0.0)) - Point::<2>::new(0.5, 0.0)).norm() < 1e-15);

    let sys = rich();
    for (x, v) in phase_samples(&sys, 100) {
        let back = legendre_inv(&sys, &x, &legendre(&sys, &x, &v)).unwrap();
        assert!((back - v).norm() < 1e-12);
    }
}

#[test]
fn hamiltonian_of_legendre_is_energy() {
    let sys = rich();
    for (x, v) in phase_samples(&sys, 200) {
        let h = hamiltonian(&sys, &HamiltonianSpec::standard(sys.k), &x, &legendre(&sys, &x, &v)).unwrap();
        assert!((h - energy(&sys, &x, &v)).abs() < 1e-12);
    }
}

#[test]
fn reduction_examples() {
    let red = reduce(&flat(0.5));
    assert_eq!(red.k, 0.5);
    assert_eq!(red.fields.metric(&Point::<2>::new(0.3, 0.3)), Mat::<2>::identity());

    let sys = system(DiskModel { quadratic_potential: -0.25, ..DiskModel::flat() }, 1.0);
    let red = reduce(&sys);
    for x in sys.domain.interior_samples(50, 0.0) {
        let expected = Mat::<2>::identity() * (2.0 * (1.0 - sys.fields.potential(&x)));
        assert!((red.fields.metric(&x) - expected).amax() < 1e-14);
        assert_eq!(red.fields.potential(&x), 0.0);
        assert_eq!(red.fields.one_form(&x), sys.fields.one_form(&x));
    }
}

#[test]
fn reduction_metric_matches_hand_value() {
    // U = |x|²/4, k = 1 at (1, 0): G = 2 (1 - 1/4) δ.
    struct Quarter;
    impl FieldModel<2> for Quarter {
        fn metric(&self, _x: &Point<2>) -> Mat<2> {
            Mat::<2>::identity()
        }
        fn one_form(&self, _x: &Point<2>) -> Point<2> {
            Point::<2>::zeros()
        }
        fn potential(&self, x: &Point<2>) -> f64 {
            0.25 * x.norm_squared()
        }
    }
    let sys = MpSystem::new(ChartDomain::ball(1.0).unwrap(), ScenarioFields::new(Arc::new(Quarter)), 1.0).unwrap();
    let g = reduce(&sys).fields.metric(&Point::<2>::new(1.0, 0.0));
    assert!((g - Mat::<2>::identity() * 1.5).amax() < 1e-15);
}

#[test]
fn reduced_partials_match_finite_differences() {
    let sys = rich();
    let analytic = reduce(&MpSystem { fields: sys.fields.clone().with_mode(DerivativeMode::Analytic), ..sys.clone() });
    let numeric = reduce(&sys);
    for x in sys.domain.interior_samples(50, 0.0) {
        let (a, b) = (analytic.fields.metric_partials(&x), numeric.fields.metric_partials(&x));
        for i in 0..2 {
            assert!((a[i] - b[i]).amax() < 1e-6);
        }
    }
}

#[test]
fn reduced_unit_sphere_is_the_half_energy_level() {
    let red = reduce(&rich());
    for (x, u) in phase_samples(&red, 50) {
        let v = sphere_lift(&red, &x, &u).unwrap();
        assert!((inner(&red.fields.metric(&x), &v, &v) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sphere_lift_examples() {
    let x = Point::<2>::new(0.1, 0.0);
    let u = Point::<2>::new(1.0, 0.0);
    assert!((sphere_lift(&flat(0.5), &x, &u).unwrap() - u).norm() < 1e-15);
    assert!((sphere_lift(&flat(2.0), &x, &u).unwrap() - u * 2.0).norm() < 1e-15);
    let sys = rich();
    for (x, u) in phase_samples(&sys, 50) {
        let v = sphere_lift(&sys, &x, &u).unwrap();
        assert!((energy(&sys, &x, &v) - sys.k).abs() < 1e-12);
    }
    assert!(sphere_lift(&flat(0.5), &x, &Point::<2>::zeros()).is_err());
}

#[test]
fn convexity_margins_on_the_disk() {
    let p = Point::<2>::new(1.0, 0.0);
    let up = Point::<2>::new(0.0, 1.0);
    assert!((mp_convexity_margin(&flat(0.5), &p, &up).unwrap() - 1.0).abs() < 1e-12);

    // Y v = B J v; at (1, 0) with ν = (-1, 0): <Y v, ν> = B for v = (0, 1).
    let b = 0.1;
    let mag = system(DiskModel { field: b, ..DiskModel::flat() }, 0.5);
    assert!((mp_convexity_margin(&mag, &p, &up).unwrap() - (1.0 - b)).abs() < 1e-9);
    assert!((mp_convexity_margin(&mag, &p, &-up).unwrap() - (1.0 + b)).abs() < 1e-9);

    // U = u0 (1 - |x|²): dU(ν) = 2 u0 at (1, 0); |v|² = 2k there.
    let u0 = 0.2;
    let pot = system(DiskModel { quadratic_potential: u0, ..DiskModel::flat() }, 1.0);
    assert!((mp_convexity_margin(&pot, &p, &up).unwrap() - (2.0 + 2.0 * u0)).abs() < 1e-9);
}

#[test]
fn sampled_margins_cover_both_orientations() {
    let mag = system(DiskModel { field: 0.3, ..DiskModel::flat() }, 0.5);
    let samples = sample_convexity_margins(&mag, 50, 2).unwrap();
    assert_eq!(samples.len(), 100);
    let min = samples.iter().map(|s| s.margin).fold(f64::INFINITY, f64::min);
    let max = samples.iter().map(|s| s.margin).fold(f64::NEG_INFINITY, f64::max);
    assert!((min - 0.7).abs() < 1e-8 && (max - 1.3).abs() < 1e-8);
}
