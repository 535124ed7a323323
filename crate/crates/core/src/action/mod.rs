//! Time-free action, the Mañé action potential between boundary points and
//! boundary action tables.

use rayon::prelude::*;

use crate::error::{MpError, Result};
use crate::flow::{
    integrate, integrate_to_exit, variational_flow, FlowOptions, Formulation, PhaseState, ReducedCurve, Trajectory,
};
use crate::flow::Dynamics;
use crate::geometry::{inner, ChartDomain, Mat, Point};
use crate::ode::State;
use crate::quadrature::try_gauss_legendre;
use crate::systems::MpSystem;

pub const SHOOTING_TOLERANCE: f64 = 1e-9;
pub const SHOOTING_MAX_ITERATIONS: usize = 50;

/// `½|v|² + k - U - α(v)`.
fn lagrangian<const D: usize>(traj: &Trajectory<D>, x: &Point<D>, v: &Point<D>) -> f64 {
    let f = &traj.fields;
    0.5 * inner(&f.metric(x), v, v) + traj.k - f.potential(x) - f.one_form(x).dot(v)
}

/// Time-free action of an energy-`k` trajectory over its whole span.
///
/// Trajectories of the time-changed flow are integrated against `dt = μ ds`.
pub fn action_along<const D: usize>(traj: &Trajectory<D>) -> Result<f64> {
    let mut total = 0.0;
    for step in &traj.solution.steps {
        total += try_gauss_legendre(
            |t| {
                let s = PhaseState::unpack(&step.eval(t), traj.representation());
                let v = s.to_velocity(&traj.fields)?;
                let dt = match &traj.dynamics {
                    Dynamics::Mp(_) => 1.0,
                    Dynamics::Tilde(mu) => mu.value(&s.x),
                };
                Ok(lagrangian(traj, &s.x, &v) * dt)
            },
            step.t0,
            step.t1(),
        )?;
    }
    Ok(total)
}

/// `½∫|γ'|²_G ds + k' S - ∫α(γ')` for a reparametrized curve of the reduced system.
pub fn magnetic_action_along<const D: usize>(
    reduced: &MpSystem<D>,
    curve: &ReducedCurve<D>,
) -> Result<f64> {
    let f = &reduced.fields;
    let breaks = curve.breakpoints();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += try_gauss_legendre(
            |s| {
                let x = curve.point(s);
                let v = curve.velocity(s)?;
                Ok(0.5 * inner(&f.metric(&x), &v, &v) + reduced.k - f.potential(&x) - f.one_form(&x).dot(&v))
            },
            w[0],
            w[1],
        )?;
    }
    Ok(total)
}

/// Action of the polygon through `points`, traversed at energy `k`:
/// `∫ sqrt(2(k - U)) |dγ|_g - ∫ α`.
pub fn polygon_action<const D: usize>(sys: &MpSystem<D>, points: &[Point<D>]) -> Result<f64> {
    let f = &sys.fields;
    let mut total = 0.0;
    for w in points.windows(2) {
        let d = w[1] - w[0];
        total += try_gauss_legendre(
            |r| {
                let x = w[0] + d * r;
                let gap = sys.k - f.potential(&x);
                if gap <= 0.0 {
                    return Err(MpError::BelowPotential { k: sys.k, potential: f.potential(&x), point: x.as_slice().to_vec() });
                }
                Ok((2.0 * gap).sqrt() * inner(&f.metric(&x), &d, &d).sqrt() - f.one_form(&x).dot(&d))
            },
            0.0,
            1.0,
        )?;
    }
    Ok(total)
}

/// Result of a Mañé potential evaluation.
#[derive(Debug, Clone)]
pub struct ActionValue<const D: usize = 2> {
    pub value: f64,
    /// Transit time `T`.
    pub transit_time: f64,
    pub initial_velocity: Point<D>,
    pub trajectory: Trajectory<D>,
    pub converged: bool,
    /// Terminal position error `|x(T) - y|`.
    pub residual: f64,
    pub iterations: usize,
}

/// Converged shooting solution.
#[derive(Debug, Clone)]
pub struct Shot<const D: usize> {
    pub velocity: Point<D>,
    pub transit_time: f64,
    pub trajectory: Trajectory<D>,
    pub residual: f64,
    pub iterations: usize,
}

/// Euclidean orthonormal basis of `d^⊥`.
fn complement<const D: usize>(d: &Point<D>) -> Vec<Point<D>> {
    let mut basis = vec![*d];
    for i in 0..D {
        let mut e = Point::<D>::zeros();
        e[i] = 1.0;
        for b in basis.iter() {
            let c = e.dot(b);
            e -= b * c;
        }
        if e.norm() > 1e-6 {
            basis.push(e.normalize());
        }
        if basis.len() == D {
            break;
        }
    }
    basis.split_off(1)
}

struct Lift<const D: usize> {
    v: Point<D>,
    dv: Vec<Point<D>>,
}

/// `v = c u / |u|_g` with `u = d0 + Σ a_i e_i` and its derivatives in `a`.
fn lift<const D: usize>(g: &Mat<D>, c: f64, d0: &Point<D>, basis: &[Point<D>], a: &[f64]) -> Lift<D> {
    let mut u = *d0;
    for (e, ai) in basis.iter().zip(a) {
        u += e * *ai;
    }
    let n = inner(g, &u, &u).sqrt();
    let dv = basis
        .iter()
        .map(|e| (e / n - u * (inner(g, &u, e) / n.powi(3))) * c)
        .collect();
    Lift { v: u * (c / n), dv }
}

const SCAN_ANGLES: usize = 15;
const SCAN_MAX_ANGLE: f64 = 1.4;

/// Direction parameters and exit time of the scanned ray whose exit from `M`
/// lands closest to `y`.
#[allow(clippy::too_many_arguments)]
fn initial_guess<const D: usize>(
    sys: &MpSystem<D>,
    x: &Point<D>,
    y: &Point<D>,
    g: &Mat<D>,
    c: f64,
    d0: &Point<D>,
    basis: &[Point<D>],
    opts: &FlowOptions,
) -> Option<(Vec<f64>, f64)> {
    let angles: Vec<f64> = (0..SCAN_ANGLES)
        .map(|i| SCAN_MAX_ANGLE * (2.0 * i as f64 / (SCAN_ANGLES - 1) as f64 - 1.0))
        .collect();
    let per_axis = if D == 2 { SCAN_ANGLES } else { SCAN_ANGLES / 2 + 1 };
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for idx in 0..per_axis.pow(D as u32 - 1) {
        let a: Vec<f64> = (0..D - 1)
            .map(|j| {
                let i = (idx / per_axis.pow(j as u32)) % per_axis;
                angles[i * (SCAN_ANGLES - 1) / (per_axis - 1).max(1)].tan()
            })
            .collect();
        let l = lift(g, c, d0, basis, &a);
        let Ok((_, event)) = integrate_to_exit(sys, Formulation::Lagrangian, &PhaseState::velocity(*x, l.v), opts) else {
            continue;
        };
        let miss = (event.state.x - y).norm();
        if best.as_ref().is_none_or(|b| miss < b.0) {
            best = Some((miss, a, event.tau));
        }
    }
    best.map(|(_, a, tau)| (a, tau))
}

/// Initial velocity on `S^k_x M` of the MP-geodesic from `x` to `y`.
///
/// Damped Newton iteration on the direction parameters and the transit time,
/// with derivatives from the variational flow. The iteration starts from the
/// best of a fan of rays run to their exit from `M`.
pub fn shoot<const D: usize>(
    sys: &MpSystem<D>,
    x: &Point<D>,
    y: &Point<D>,
    opts: &FlowOptions,
) -> Result<Shot<D>> {
    let chord = y - x;
    let dist = chord.norm();
    if !(dist > 0.0) {
        return Err(MpError::InvalidParameter("shooting needs distinct endpoints".into()));
    }
    let gap = sys.k - sys.fields.potential(x);
    if gap <= 0.0 {
        return Err(MpError::BelowPotential { k: sys.k, potential: sys.fields.potential(x), point: x.as_slice().to_vec() });
    }
    let c = (2.0 * gap).sqrt();
    let g = sys.fields.metric(x);
    let d0 = chord / dist;
    let basis = complement(&d0);
    let opts = FlowOptions { stop_at_boundary: false, ..*opts };
    let horizon = opts.horizon_for(sys);

    let (mut a, mut t_end) = initial_guess(sys, x, y, &g, c, &d0, &basis, &opts)
        .unwrap_or_else(|| (vec![0.0; D - 1], dist / inner(&g, &d0, &d0).sqrt() / c));

    let evaluate = |a: &[f64], t_end: f64| -> Result<(Lift<D>, Trajectory<D>, Point<D>)> {
        let l = lift(&g, c, &d0, &basis, a);
        let traj = integrate(sys, Formulation::Lagrangian, &PhaseState::velocity(*x, l.v), t_end, &opts)?;
        let r = traj.point_at(t_end) - y;
        Ok((l, traj, r))
    };

    let (mut l, mut traj, mut r) = evaluate(&a, t_end)?;
    for iter in 0..SHOOTING_MAX_ITERATIONS {
        let res = r.norm();
        if res <= SHOOTING_TOLERANCE {
            return Ok(Shot { velocity: l.v, transit_time: t_end, trajectory: traj, residual: res, iterations: iter });
        }
        let mut jac = Mat::<D>::zeros();
        for (i, dv) in l.dv.iter().enumerate() {
            let mut delta0 = State::<D, 2>::zeros();
            delta0.set_column(1, dv);
            let var = variational_flow(&traj, &delta0, &opts.ode)?;
            jac.set_column(i, &var.position_at(t_end));
        }
        jac.set_column(D - 1, &traj.base_velocity_at(t_end)?);
        let step = crate::geometry::solve(&jac, &(-r)).ok_or(MpError::ShootingFailure { iterations: iter, residual: res })?;

        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-4 {
            let a_new: Vec<f64> = a.iter().enumerate().map(|(i, ai)| ai + lambda * step[i]).collect();
            let t_new = t_end + lambda * step[D - 1];
            if t_new > 0.0 && t_new < horizon {
                if let Ok((l_new, traj_new, r_new)) = evaluate(&a_new, t_new) {
                    if r_new.norm() < res {
                        a = a_new;
                        t_end = t_new;
                        l = l_new;
                        traj = traj_new;
                        r = r_new;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(MpError::ShootingFailure { iterations: iter + 1, residual: res });
        }
    }
    let res = r.norm();
    if res <= SHOOTING_TOLERANCE {
        return Ok(Shot { velocity: l.v, transit_time: t_end, trajectory: traj, residual: res, iterations: SHOOTING_MAX_ITERATIONS });
    }
    Err(MpError::ShootingFailure { iterations: SHOOTING_MAX_ITERATIONS, residual: res })
}

/// `𝔸(x, y)` as the action of the connecting MP-geodesic.
pub fn mane_potential<const D: usize>(
    sys: &MpSystem<D>,
    x: &Point<D>,
    y: &Point<D>,
    opts: &FlowOptions,
) -> Result<ActionValue<D>> {
    let shot = shoot(sys, x, y, opts)?;
    Ok(ActionValue {
        value: action_along(&shot.trajectory)?,
        transit_time: shot.transit_time,
        initial_velocity: shot.velocity,
        trajectory: shot.trajectory,
        converged: true,
        residual: shot.residual,
        iterations: shot.iterations,
    })
}

/// Boundary action function on an `n`-point boundary grid.
#[derive(Debug, Clone)]
pub struct ActionTable<const D: usize> {
    /// Boundary parameters of each grid point.
    pub params: Vec<Vec<f64>>,
    pub points: Vec<Point<D>>,
    /// `values[i][j] = 𝔸(points[i], points[j])`; `NaN` on the diagonal and
    /// for failed entries.
    pub values: Vec<Vec<f64>>,
    pub failures: Vec<(usize, usize, MpError)>,
}

impl<const D: usize> ActionTable<D> {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    /// Largest entrywise difference over entries finite in both tables.
    pub fn max_difference(&self, other: &ActionTable<D>) -> f64 {
        let mut worst: f64 = 0.0;
        for (ra, rb) in self.values.iter().zip(&other.values) {
            for (a, b) in ra.iter().zip(rb) {
                if a.is_finite() && b.is_finite() {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    /// `max |𝔸(x, y) - 𝔸(y, x)|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            for j in 0..i {
                let (a, b) = (self.values[i][j], self.values[j][i]);
                if a.is_finite() && b.is_finite() {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    /// Number of off-diagonal entries that were computed.
    pub fn finite_entries(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_finite()).count()
    }
}

pub fn boundary_action_table<const D: usize>(
    sys: &MpSystem<D>,
    n: usize,
    opts: &FlowOptions,
) -> Result<ActionTable<D>> {
    if n < 2 {
        return Err(MpError::InvalidParameter(format!("action table needs n >= 2, got {n}")));
    }
    let params = ChartDomain::<D>::boundary_grid_params(n);
    let points: Vec<Point<D>> = params.iter().map(|p| sys.domain.boundary_point(p)).collect();
    let rows: Vec<Vec<std::result::Result<f64, MpError>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Ok(f64::NAN)
                    } else {
                        mane_potential(sys, &points[i], &points[j], opts).map(|a| a.value)
                    }
                })
                .collect()
        })
        .collect();
    let mut values = vec![vec![f64::NAN; n]; n];
    let mut failures = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, entry) in row.into_iter().enumerate() {
            match entry {
                Ok(v) => values[i][j] = v,
                Err(e) => failures.push((i, j, e)),
            }
        }
    }
    Ok(ActionTable { params, points, values, failures })
}
