use crate::action::action_along;
use crate::error::{MpError, Result};
use crate::geometry::{inner, inward_normal_at, ChartDomain, Point};
use crate::ode::{dopri_step, Solution};
use crate::systems::{sphere_lift, MpSystem};

use super::{run, Dynamics, FlowOptions, Formulation, PhaseState, Trajectory};

/// Rays whose normal component `⟨v, ν⟩ / |v|` is below this are flagged as glancing.
pub const GLANCING_THRESHOLD: f64 = 1e-6;

const EXIT_TOLERANCE: f64 = 1e-12;
const SCAN_SAMPLES: usize = 32;

/// First crossing of `∂M` from the inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitEvent<const D: usize> {
    pub tau: f64,
    pub state: PhaseState<D>,
    /// `ρ` at the polished exit point.
    pub rho: f64,
}

/// Locates the first exit of `traj` from `M` and polishes it to `|ρ| ≤ 1e-12`.
pub fn exit_time<const D: usize>(sys: &MpSystem<D>, traj: &Trajectory<D>) -> Result<ExitEvent<D>> {
    let (step_idx, lo, hi) = bracket(&sys.domain, traj).ok_or(MpError::NoExit { t_max: traj.t_end() })?;
    let step = &traj.solution.steps[step_idx];
    let rho_at = |t: f64| sys.domain.rho(&step.eval(t).column(0).into_owned());
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let r = rho_at(m);
        if r.abs() <= EXIT_TOLERANCE || b - a < 1e-15 * b.abs().max(1.0) {
            a = m;
            b = m;
            break;
        }
        if r > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let mut tau = 0.5 * (a + b);

    // Replace the dense interpolant by a direct step of the integrator.
    let mut f = |_: f64, s: &crate::ode::State<D, 2>| traj.dynamics.eval(&traj.fields, traj.k, s);
    let y0 = step.y0();
    let f0 = f(step.t0, &y0)?;
    let opts = crate::ode::OdeOptions::default();
    let mut state = step.eval(tau);
    for _ in 0..8 {
        let h = tau - step.t0;
        state = if h > 0.0 { dopri_step(&mut f, step.t0, &y0, &f0, h, &opts)?.y1 } else { y0 };
        let x: Point<D> = state.column(0).into_owned();
        let r = sys.domain.rho(&x);
        if r.abs() <= EXIT_TOLERANCE {
            break;
        }
        let xdot: Point<D> = f(tau, &state)?.column(0).into_owned();
        let rdot = sys.domain.rho_gradient(&x).dot(&xdot);
        if rdot.abs() < 1e-14 {
            break;
        }
        tau -= r / rdot;
    }
    let ps = PhaseState::unpack(&state, traj.representation());
    Ok(ExitEvent { tau, rho: sys.domain.rho(&ps.x), state: ps })
}

/// Step index and sub-interval containing the first inside-to-outside crossing.
fn bracket<const D: usize>(domain: &ChartDomain<D>, traj: &Trajectory<D>) -> Option<(usize, f64, f64)> {
    let mut been_inside = false;
    for (i, step) in traj.solution.steps.iter().enumerate() {
        let mut prev = step.t0;
        for j in 0..=SCAN_SAMPLES {
            let t = step.t0 + step.h * j as f64 / SCAN_SAMPLES as f64;
            let r = domain.rho(&step.eval(t).column(0).into_owned());
            if r > 0.0 {
                been_inside = true;
            } else if r < 0.0 && been_inside {
                return Some((i, prev, t));
            }
            prev = t;
        }
    }
    None
}

/// Cuts `traj` at the exit event, replacing the last step by a direct step.
pub(crate) fn truncate<const D: usize>(traj: &Trajectory<D>, event: &ExitEvent<D>) -> Result<Trajectory<D>> {
    let idx = traj.solution.step_index(event.tau);
    let step = &traj.solution.steps[idx];
    let mut steps = traj.solution.steps[..idx].to_vec();
    let h = event.tau - step.t0;
    if h > 0.0 {
        let mut f = |_: f64, s: &crate::ode::State<D, 2>| traj.dynamics.eval(&traj.fields, traj.k, s);
        let y0 = step.y0();
        let f0 = f(step.t0, &y0)?;
        let attempt = dopri_step(&mut f, step.t0, &y0, &f0, h, &crate::ode::OdeOptions::default())?;
        steps.push(attempt.dense);
    } else if steps.is_empty() {
        return Err(MpError::InvalidParameter("exit at the initial time".into()));
    }
    let mut drift: Vec<(f64, f64)> =
        traj.energy_drift.iter().copied().filter(|&(t, _)| t < event.tau).collect();
    let mut out = Trajectory {
        fields: traj.fields.clone(),
        k: traj.k,
        dynamics: traj.dynamics.clone(),
        solution: Solution { steps, rejected: traj.solution.rejected, stopped: true },
        energy_drift: Vec::new(),
        initial_energy: traj.initial_energy,
    };
    drift.push((event.tau, out.energy_at(event.tau)? - traj.initial_energy));
    out.energy_drift = drift;
    Ok(out)
}

pub(crate) fn run_to_exit<const D: usize>(
    sys: &MpSystem<D>,
    dynamics: Dynamics<D>,
    state0: &PhaseState<D>,
    horizon: f64,
    opts: &FlowOptions,
) -> Result<(Trajectory<D>, ExitEvent<D>)> {
    let opts = FlowOptions { stop_at_boundary: true, ..*opts };
    let traj = run(sys, dynamics, state0, horizon, &opts)?;
    if !traj.solution.stopped {
        return Err(MpError::NoExit { t_max: horizon });
    }
    let event = exit_time(sys, &traj)?;
    Ok((truncate(&traj, &event)?, event))
}

/// Integrates until the first exit from `M` within the horizon of `opts`.
pub fn integrate_to_exit<const D: usize>(
    sys: &MpSystem<D>,
    formulation: Formulation,
    state0: &PhaseState<D>,
    opts: &FlowOptions,
) -> Result<(Trajectory<D>, ExitEvent<D>)> {
    run_to_exit(sys, Dynamics::Mp(formulation), state0, opts.horizon_for(sys), opts)
}

/// Scattering data of one inbound ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringRecord<const D: usize> {
    pub entry_point: Point<D>,
    pub entry_velocity: Point<D>,
    pub exit_point: Point<D>,
    pub exit_velocity: Point<D>,
    pub tau: f64,
    pub action: f64,
    pub glancing: bool,
}

/// Scattering of the ray entering at boundary point `p` in direction `u`.
///
/// `u` is lifted to the energy level; it must point into `M`.
pub fn scattering<const D: usize>(
    sys: &MpSystem<D>,
    p: &Point<D>,
    u: &Point<D>,
    opts: &FlowOptions,
) -> Result<ScatteringRecord<D>> {
    let nu = inward_normal_at(&sys.fields, &sys.domain, p)?;
    let v = sphere_lift(sys, p, u)?;
    let g = sys.fields.metric(p);
    let normal = inner(&g, &v, &nu);
    if normal <= 0.0 {
        return Err(MpError::InvalidParameter(format!(
            "direction {:?} is not inbound at {:?}",
            u.as_slice(),
            p.as_slice()
        )));
    }
    let glancing = normal / inner(&g, &v, &v).sqrt() < GLANCING_THRESHOLD;
    let (traj, event) = integrate_to_exit(sys, Formulation::Lagrangian, &PhaseState::velocity(*p, v), opts)?;
    Ok(ScatteringRecord {
        entry_point: *p,
        entry_velocity: v,
        exit_point: event.state.x,
        exit_velocity: event.state.w,
        tau: event.tau,
        action: action_along(&traj)?,
        glancing,
    })
}

/// Deterministic fan of `n` inbound rays `(p, u)` spread over `∂M`.
///
/// Directions deviate from the Euclidean inward normal by angles in
/// `(-1.3, 1.3)` rad following a golden-ratio sequence.
pub fn ray_fan<const D: usize>(sys: &MpSystem<D>, n: usize) -> Vec<(Point<D>, Point<D>)> {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    const PLASTIC: f64 = 0.754_877_666_246_692_7;
    let params = ChartDomain::<D>::boundary_grid_params(n);
    params
        .iter()
        .enumerate()
        .map(|(i, prm)| {
            let p = sys.domain.boundary_point(prm);
            let normal = sys.domain.rho_gradient(&p).normalize();
            let tilt = 1.3 * (2.0 * ((i as f64 + 1.0) * GOLDEN).fract() - 1.0);
            let tangent = tangent_direction(&normal, std::f64::consts::TAU * (i as f64 * PLASTIC).fract());
            (p, normal * tilt.cos() + tangent * tilt.sin())
        })
        .collect()
}

/// A unit tangent to the hyperplane `normal^⊥`, rotated by `angle` in 3D.
fn tangent_direction<const D: usize>(normal: &Point<D>, angle: f64) -> Point<D> {
    let mut axis = Point::<D>::zeros();
    let least = normal.iamin();
    axis[least] = 1.0;
    let e1 = (axis - normal * normal.dot(&axis)).normalize();
    if D == 2 {
        return Point::<D>::from_fn(|i, _| if i == 0 { -normal[1] } else { normal[0] });
    }
    let mut e2 = Point::<D>::zeros();
    if D == 3 {
        e2[0] = normal[1] * e1[2] - normal[2] * e1[1];
        e2[1] = normal[2] * e1[0] - normal[0] * e1[2];
        e2[2] = normal[0] * e1[1] - normal[1] * e1[0];
    }
    e1 * angle.cos() + e2 * angle.sin()
}
