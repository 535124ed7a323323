use crate::error::Result;
use crate::geometry::{inner, DerivativeMode, Mat, Point};
use crate::ode::{self, OdeOptions, Solution, State};
use crate::systems::MpSystem;

use super::{integrate_to_exit, FlowOptions, Formulation, PhaseState, Trajectory};

const VARIATION_STEP: f64 = 1e-6;

/// Differencing a vector field that is itself a finite difference needs a
/// coarser step to stay above its rounding noise.
fn variation_step(mode: DerivativeMode) -> f64 {
    match mode {
        DerivativeMode::Analytic => VARIATION_STEP,
        DerivativeMode::FiniteDifference { scale } => (10.0 * scale).max(VARIATION_STEP),
    }
}

/// Solution `δ(t)` of the linearized flow along a trajectory.
#[derive(Debug, Clone)]
pub struct VariationalSolution<const D: usize> {
    solution: Solution<D, 2>,
}

impl<const D: usize> VariationalSolution<D> {
    pub fn at(&self, t: f64) -> State<D, 2> {
        self.solution.eval(t)
    }

    pub fn final_state(&self) -> State<D, 2> {
        self.solution.final_state()
    }

    /// The base component `δx(t)`.
    pub fn position_at(&self, t: f64) -> Point<D> {
        self.at(t).column(0).into_owned()
    }
}

/// Integrates `δ' = DF(z(t)) δ` over the span of `traj`.
///
/// `DF δ` is a central difference of the flow's vector field in direction
/// `δ / |δ|`, with step `1e-6` for analytic derivatives and ten times the
/// differencing scale otherwise.
pub fn variational_flow<const D: usize>(
    traj: &Trajectory<D>,
    delta0: &State<D, 2>,
    opts: &OdeOptions,
) -> Result<VariationalSolution<D>> {
    let field = |s: &State<D, 2>| traj.dynamics.eval(&traj.fields, traj.k, s);
    let h = variation_step(traj.fields.mode());
    let solution = ode::integrate(
        |t, delta: &State<D, 2>| {
            let n = delta.norm();
            if n == 0.0 {
                return Ok(State::<D, 2>::zeros());
            }
            let z = traj.solution.eval(t);
            let dir = delta / n;
            let plus = field(&(z + dir * h))?;
            let minus = field(&(z - dir * h))?;
            Ok((plus - minus) * (n / (2.0 * h)))
        },
        traj.t_start(),
        *delta0,
        traj.t_end(),
        opts,
        |_, _| Ok(false),
    )?;
    Ok(VariationalSolution { solution })
}

/// Normalized Jacobi determinant along the MP geodesic from `(x, v)` to `∂M`.
#[derive(Debug, Clone)]
pub struct ConjugateReport {
    pub exit_time: f64,
    /// `(t, det[ẋ, δx_1, ..] / (t^{D-1} det₀))` on a uniform grid of `(0, τ]`.
    pub samples: Vec<(f64, f64)>,
    pub min_normalized: f64,
}

impl ConjugateReport {
    /// No sign change of the Jacobi determinant before the exit.
    pub fn conjugate_free(&self) -> bool {
        self.min_normalized > 0.0
    }
}

/// Tracks `det[ẋ(t), δx_1(t), ..]` for the variations rotating `v` within
/// `S^k_x M`. A zero at `t > 0` marks a point conjugate to `x` along the
/// energy level.
pub fn conjugate_monitor<const D: usize>(
    sys: &MpSystem<D>,
    x: &Point<D>,
    v: &Point<D>,
    samples: usize,
    opts: &FlowOptions,
) -> Result<ConjugateReport> {
    let (traj, event) = integrate_to_exit(sys, Formulation::Lagrangian, &PhaseState::velocity(*x, *v), opts)?;
    let g = sys.fields.metric(x);
    let speed = inner(&g, v, v).sqrt();
    let basis = orthonormal_complement(&g, v);
    let mut variations = Vec::with_capacity(D - 1);
    for dv in basis.iter() {
        let mut delta0 = State::<D, 2>::zeros();
        delta0.set_column(1, &(dv * speed));
        variations.push(variational_flow(&traj, &delta0, &opts.ode)?);
    }
    let det = |t: f64, scale: f64| -> Result<f64> {
        let mut m = Mat::<D>::zeros();
        m.set_column(0, &traj.base_velocity_at(t)?);
        for (i, var) in variations.iter().enumerate() {
            m.set_column(i + 1, &(var.position_at(t) / scale));
        }
        Ok(crate::geometry::determinant(&m))
    };
    let mut m0 = Mat::<D>::zeros();
    m0.set_column(0, v);
    for (i, dv) in basis.iter().enumerate() {
        m0.set_column(i + 1, &(dv * speed));
    }
    let det0 = crate::geometry::determinant(&m0);
    let n = samples.max(1);
    let mut out = Vec::with_capacity(n);
    let mut min = f64::INFINITY;
    for j in 1..=n {
        let t = event.tau * j as f64 / n as f64;
        let value = det(t, t)? / det0;
        min = min.min(value);
        out.push((t, value));
    }
    Ok(ConjugateReport { exit_time: event.tau, samples: out, min_normalized: min })
}

/// `g`-orthonormal basis of `v^⊥`.
pub(crate) fn orthonormal_complement<const D: usize>(g: &Mat<D>, v: &Point<D>) -> Vec<Point<D>> {
    let mut basis: Vec<Point<D>> = vec![*v / inner(g, v, v).sqrt()];
    for i in 0..D {
        let mut e = Point::<D>::zeros();
        e[i] = 1.0;
        for b in basis.iter() {
            let c = inner(g, &e, b);
            e -= b * c;
        }
        let n = inner(g, &e, &e).sqrt();
        if n > 1e-8 {
            basis.push(e / n);
        }
        if basis.len() == D {
            break;
        }
    }
    basis.split_off(1)
}
