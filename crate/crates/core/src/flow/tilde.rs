use std::sync::Arc;

use crate::error::{MpError, Result};
use crate::geometry::{Point, ScalarField};
use crate::quadrature::gauss_legendre;
use crate::systems::{hamiltonian, HamiltonianSpec, MpSystem};

use super::exit::run_to_exit;
use super::{run, Dynamics, ExitEvent, FlowOptions, PhaseState, Representation, Trajectory};

const LEVEL_TOLERANCE: f64 = 1e-10;

fn check_start<const D: usize>(
    sys: &MpSystem<D>,
    mu: &Arc<dyn ScalarField<D>>,
    state0: &PhaseState<D>,
) -> Result<()> {
    if state0.rep != Representation::CanonicalMomentum {
        return Err(MpError::RepresentationMismatch {
            expected: Representation::CanonicalMomentum.name(),
            found: state0.rep.name(),
        });
    }
    let m = mu.value(&state0.x);
    if !(m > 0.0) {
        return Err(MpError::InvalidParameter(format!("time change {m} is not positive")));
    }
    let h = hamiltonian(sys, &HamiltonianSpec::tilde(mu.clone(), sys.k), &state0.x, &state0.w)?;
    if (h - sys.k).abs() > LEVEL_TOLERANCE * sys.k.abs().max(1.0) {
        return Err(MpError::InvalidParameter(format!(
            "initial state is off the level set: H = {h}, k = {}",
            sys.k
        )));
    }
    Ok(())
}

/// Flow of `H̃_{μ,k}` from a canonical state on `{H̃ = k}`, on `[0, s_max]`.
pub fn integrate_tilde<const D: usize>(
    sys: &MpSystem<D>,
    mu: Arc<dyn ScalarField<D>>,
    state0: &PhaseState<D>,
    s_max: f64,
    opts: &FlowOptions,
) -> Result<Trajectory<D>> {
    check_start(sys, &mu, state0)?;
    run(sys, Dynamics::Tilde(mu), state0, s_max, opts)
}

/// Flow of `H̃_{μ,k}` up to the first exit from `M`.
pub fn integrate_tilde_to_exit<const D: usize>(
    sys: &MpSystem<D>,
    mu: Arc<dyn ScalarField<D>>,
    state0: &PhaseState<D>,
    opts: &FlowOptions,
) -> Result<(Trajectory<D>, ExitEvent<D>)> {
    check_start(sys, &mu, state0)?;
    let mu_min = sys
        .domain
        .interior_samples(256, 0.0)
        .iter()
        .map(|x| mu.value(x))
        .fold(f64::INFINITY, f64::min);
    let horizon = opts.horizon_for(sys) / mu_min.max(1e-3);
    run_to_exit(sys, Dynamics::Tilde(mu), state0, horizon, opts)
}

/// `β(s) = ∫₀ˢ μ(x̃(σ)) dσ` along a trajectory, so that `x̃(s) = x(β(s))`.
pub struct TimeChange<const D: usize> {
    traj: Trajectory<D>,
    mu: Arc<dyn ScalarField<D>>,
    cumulative: Vec<f64>,
}

impl<const D: usize> TimeChange<D> {
    fn partial(&self, idx: usize, s: f64) -> f64 {
        let step = &self.traj.solution.steps[idx];
        let x = |t: f64| -> Point<D> { step.eval(t).column(0).into_owned() };
        gauss_legendre(|t| self.mu.value(&x(t)), step.t0, s)
    }

    pub fn beta(&self, s: f64) -> f64 {
        let idx = self.traj.solution.step_index(s);
        self.cumulative[idx] + self.partial(idx, s)
    }

    /// Total `β` over the trajectory.
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }
}

pub fn time_change<const D: usize>(traj: &Trajectory<D>, mu: Arc<dyn ScalarField<D>>) -> TimeChange<D> {
    let mut tc = TimeChange { traj: traj.clone(), mu, cumulative: vec![0.0] };
    for (i, step) in traj.solution.steps.iter().enumerate() {
        let next = tc.cumulative[i] + tc.partial(i, step.t1());
        tc.cumulative.push(next);
    }
    tc
}
