//! Integration of the MP-flow.
//!
//! Four equivalent first-order formulations are provided:
//!
//! * [`Formulation::Lagrangian`]: `ẋ = v`, `v̇ = -Γ(v, v) + Y v - ∇U`.
//! * [`Formulation::SymplecticTangent`]: the Hamiltonian vector field of `E`
//!   on `TM` for the twisted form `ω₀ + π*Ω`, obtained by solving
//!   `ι_X ω = dE` pointwise.
//! * [`Formulation::TwistedCotangent`]: `(x, ξ = v♭)` for the Hamiltonian
//!   `½|ξ|² + U` and the twisted form `ω_c + p*Ω`.
//! * [`Formulation::Canonical`]: `(x, ξ = v♭ - α)` for
//!   `H = ½|ξ + α|² + U` and the canonical form.
//!
//! The time-changed flow of `H̃_{μ,k}` is available through
//! [`integrate_tilde`].

mod exit;
mod reparam;
mod tilde;
mod variational;

pub use exit::{
    exit_time, integrate_to_exit, ray_fan, scattering, ExitEvent, ScatteringRecord,
    GLANCING_THRESHOLD,
};
pub use reparam::{reparametrize_to_reduced, ReducedCurve};
pub use tilde::{integrate_tilde, integrate_tilde_to_exit, time_change, TimeChange};
pub(crate) use variational::orthonormal_complement;
pub use variational::{conjugate_monitor, variational_flow, ConjugateReport, VariationalSolution};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{MpError, Result};
use crate::geometry::{inner, FieldJet, Point, ScalarField, ScenarioFields};
use crate::ode::{self, Solution, State};
pub use crate::ode::OdeOptions;
use crate::systems::MpSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Lagrangian,
    SymplecticTangent,
    TwistedCotangent,
    Canonical,
}

impl Formulation {
    pub const ALL: [Formulation; 4] = [
        Formulation::Lagrangian,
        Formulation::SymplecticTangent,
        Formulation::TwistedCotangent,
        Formulation::Canonical,
    ];

    pub fn representation(self) -> Representation {
        match self {
            Formulation::Lagrangian | Formulation::SymplecticTangent => Representation::Velocity,
            Formulation::TwistedCotangent => Representation::TwistedMomentum,
            Formulation::Canonical => Representation::CanonicalMomentum,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Formulation::Lagrangian => "lagrangian",
            Formulation::SymplecticTangent => "symplectic-tangent",
            Formulation::TwistedCotangent => "twisted-cotangent",
            Formulation::Canonical => "canonical",
        }
    }
}

/// How the second half of a phase state is to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// `w = v`.
    Velocity,
    /// `w = ξ = g v`.
    TwistedMomentum,
    /// `w = ξ = g v - α`.
    CanonicalMomentum,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Representation::Velocity => "velocity",
            Representation::TwistedMomentum => "twisted-momentum",
            Representation::CanonicalMomentum => "canonical-momentum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState<const D: usize> {
    pub x: Point<D>,
    pub w: Point<D>,
    pub rep: Representation,
}

impl<const D: usize> PhaseState<D> {
    pub fn velocity(x: Point<D>, v: Point<D>) -> Self {
        Self { x, w: v, rep: Representation::Velocity }
    }

    /// Re-expresses a velocity state in representation `rep`.
    pub fn from_velocity(fields: &ScenarioFields<D>, x: Point<D>, v: Point<D>, rep: Representation) -> Self {
        let w = match rep {
            Representation::Velocity => v,
            Representation::TwistedMomentum => fields.metric(&x) * v,
            Representation::CanonicalMomentum => fields.metric(&x) * v - fields.one_form(&x),
        };
        Self { x, w, rep }
    }

    /// The velocity `v` this state stands for.
    pub fn to_velocity(&self, fields: &ScenarioFields<D>) -> Result<Point<D>> {
        Ok(match self.rep {
            Representation::Velocity => self.w,
            Representation::TwistedMomentum => fields.checked_metric(&self.x)?.1 * self.w,
            Representation::CanonicalMomentum => {
                fields.checked_metric(&self.x)?.1 * (self.w + fields.one_form(&self.x))
            }
        })
    }

    pub fn to_representation(&self, fields: &ScenarioFields<D>, rep: Representation) -> Result<Self> {
        Ok(Self::from_velocity(fields, self.x, self.to_velocity(fields)?, rep))
    }

    pub(crate) fn pack(&self) -> State<D, 2> {
        let mut s = State::<D, 2>::zeros();
        s.set_column(0, &self.x);
        s.set_column(1, &self.w);
        s
    }

    pub(crate) fn unpack(s: &State<D, 2>, rep: Representation) -> Self {
        Self { x: s.column(0).into_owned(), w: s.column(1).into_owned(), rep }
    }
}

/// The vector field being integrated.
#[derive(Clone)]
pub(crate) enum Dynamics<const D: usize> {
    Mp(Formulation),
    /// Flow of `H̃_{μ,k}` in canonical coordinates.
    Tilde(Arc<dyn ScalarField<D>>),
}

impl<const D: usize> Dynamics<D> {
    fn representation(&self) -> Representation {
        match self {
            Dynamics::Mp(f) => f.representation(),
            Dynamics::Tilde(_) => Representation::CanonicalMomentum,
        }
    }

    pub(crate) fn eval(&self, fields: &ScenarioFields<D>, k: f64, s: &State<D, 2>) -> Result<State<D, 2>> {
        let x: Point<D> = s.column(0).into_owned();
        let w: Point<D> = s.column(1).into_owned();
        let jet = fields.jet(&x)?;
        let (dx, dw) = match self {
            Dynamics::Mp(Formulation::Lagrangian) => lagrangian(&jet, &w),
            Dynamics::Mp(Formulation::SymplecticTangent) => symplectic_tangent(&jet, &w)?,
            Dynamics::Mp(Formulation::TwistedCotangent) => twisted_cotangent(&jet, &w),
            Dynamics::Mp(Formulation::Canonical) => canonical(&jet, &w),
            Dynamics::Tilde(mu) => tilde_field(&jet, &w, mu.as_ref(), &x, k),
        };
        let mut out = State::<D, 2>::zeros();
        out.set_column(0, &dx);
        out.set_column(1, &dw);
        Ok(out)
    }
}

fn lagrangian<const D: usize>(jet: &FieldJet<D>, v: &Point<D>) -> (Point<D>, Point<D>) {
    let gamma = jet.christoffel();
    let geodesic = Point::<D>::from_fn(|i, _| inner(&gamma[i], v, v));
    (*v, -geodesic + jet.lorentz() * v - jet.potential_gradient())
}

/// Solves `ι_X (ω₀ + π*Ω) = dE` on `TM`.
fn symplectic_tangent<const D: usize>(jet: &FieldJet<D>, v: &Point<D>) -> Result<(Point<D>, Point<D>)> {
    let n = 2 * D;
    // differential of the musical map (x, v) -> (x, g(x) v)
    let mut dflat = DMatrix::<f64>::zeros(n, n);
    for i in 0..D {
        dflat[(i, i)] = 1.0;
        for k in 0..D {
            dflat[(D + i, k)] = (jet.dg[k].row(i) * v)[0];
            dflat[(D + i, D + k)] = jet.g[(i, k)];
        }
    }
    let mut canonical = DMatrix::<f64>::zeros(n, n);
    for i in 0..D {
        canonical[(i, D + i)] = 1.0;
        canonical[(D + i, i)] = -1.0;
    }
    let mut omega = dflat.transpose() * canonical * &dflat;
    let two_form = jet.two_form();
    for i in 0..D {
        for j in 0..D {
            omega[(i, j)] += two_form[(i, j)];
        }
    }
    let mut de = DVector::<f64>::zeros(n);
    let gv = jet.g * v;
    for k in 0..D {
        de[k] = 0.5 * inner(&jet.dg[k], v, v) + jet.du[k];
        de[D + k] = gv[k];
    }
    let x = omega
        .transpose()
        .lu()
        .solve(&de)
        .ok_or_else(|| MpError::InvalidParameter("degenerate symplectic form".into()))?;
    Ok((
        Point::<D>::from_fn(|i, _| x[i]),
        Point::<D>::from_fn(|i, _| x[D + i]),
    ))
}

fn twisted_cotangent<const D: usize>(jet: &FieldJet<D>, xi: &Point<D>) -> (Point<D>, Point<D>) {
    let v = jet.g_inv * xi;
    let kinetic = Point::<D>::from_fn(|i, _| 0.5 * inner(&jet.inverse_metric_partial(i), xi, xi));
    (v, -kinetic - jet.du + jet.two_form().transpose() * v)
}

/// `∂_x H` for `H = ½|ξ + α|² + U`, with `η = ξ + α`.
fn canonical_force<const D: usize>(jet: &FieldJet<D>, eta: &Point<D>) -> Point<D> {
    let v = jet.g_inv * eta;
    let kinetic = Point::<D>::from_fn(|i, _| 0.5 * inner(&jet.inverse_metric_partial(i), eta, eta));
    kinetic + jet.dalpha * v + jet.du
}

fn canonical<const D: usize>(jet: &FieldJet<D>, xi: &Point<D>) -> (Point<D>, Point<D>) {
    let eta = xi + jet.alpha;
    (jet.g_inv * eta, -canonical_force(jet, &eta))
}

fn tilde_field<const D: usize>(
    jet: &FieldJet<D>,
    xi: &Point<D>,
    mu: &dyn ScalarField<D>,
    x: &Point<D>,
    k: f64,
) -> (Point<D>, Point<D>) {
    let eta = xi + jet.alpha;
    let m = mu.value(x);
    let h = 0.5 * inner(&jet.g_inv, &eta, &eta) + jet.u;
    (jet.g_inv * eta * m, -mu.gradient(x) * (h - k) - canonical_force(jet, &eta) * m)
}

/// Right-hand side of the requested formulation at `state`.
pub fn rhs<const D: usize>(
    sys: &MpSystem<D>,
    formulation: Formulation,
    state: &PhaseState<D>,
) -> Result<PhaseState<D>> {
    if state.rep != formulation.representation() {
        return Err(MpError::RepresentationMismatch {
            expected: formulation.representation().name(),
            found: state.rep.name(),
        });
    }
    let d = Dynamics::Mp(formulation).eval(&sys.fields, sys.k, &state.pack())?;
    Ok(PhaseState::unpack(&d, state.rep))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub struct FlowOptions {
    pub ode: OdeOptions,
    /// Stop one step after the base point leaves `M` (`rho < 0`).
    pub stop_at_boundary: bool,
    /// No-exit horizon; `None` uses [`MpSystem::default_horizon`].
    pub horizon: Option<f64>,
}


impl FlowOptions {
    pub fn to_boundary() -> Self {
        Self { stop_at_boundary: true, ..Self::default() }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.ode.rtol = rtol;
        self.ode.atol = atol;
        self
    }

    pub fn horizon_for<const D: usize>(&self, sys: &MpSystem<D>) -> f64 {
        self.horizon.unwrap_or_else(|| sys.default_horizon())
    }
}

/// A dense integrated curve of one of the flows.
#[derive(Clone)]
pub struct Trajectory<const D: usize> {
    pub(crate) fields: ScenarioFields<D>,
    pub(crate) k: f64,
    pub(crate) dynamics: Dynamics<D>,
    pub(crate) solution: Solution<D, 2>,
    /// `(t, E(t) - E(0))` at every accepted step end.
    pub energy_drift: Vec<(f64, f64)>,
    pub initial_energy: f64,
}

impl<const D: usize> std::fmt::Debug for Trajectory<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Trajectory")
            .field("representation", &self.representation())
            .field("t_start", &self.t_start())
            .field("t_end", &self.t_end())
            .field("steps", &self.solution.steps.len())
            .field("rejected", &self.solution.rejected)
            .finish()
    }
}

impl<const D: usize> Trajectory<D> {
    pub fn representation(&self) -> Representation {
        self.dynamics.representation()
    }

    pub fn t_start(&self) -> f64 {
        self.solution.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn rejected_steps(&self) -> usize {
        self.solution.rejected
    }

    pub fn step_count(&self) -> usize {
        self.solution.steps.len()
    }

    /// Step boundaries `t_0 < t_1 < ... < t_n`.
    pub fn step_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.solution.steps.iter().map(|s| s.t0).collect();
        ts.push(self.t_end());
        ts
    }

    pub fn state_at(&self, t: f64) -> PhaseState<D> {
        PhaseState::unpack(&self.solution.eval(t), self.representation())
    }

    pub fn point_at(&self, t: f64) -> Point<D> {
        self.solution.eval(t).column(0).into_owned()
    }

    /// MP velocity `v` (converted from momenta where needed).
    pub fn velocity_at(&self, t: f64) -> Result<Point<D>> {
        self.state_at(t).to_velocity(&self.fields)
    }

    /// `d/dt` of the base curve in this trajectory's own parameter.
    pub fn base_velocity_at(&self, t: f64) -> Result<Point<D>> {
        let d = self.dynamics.eval(&self.fields, self.k, &self.solution.eval(t))?;
        Ok(d.column(0).into_owned())
    }

    pub fn final_state(&self) -> PhaseState<D> {
        PhaseState::unpack(&self.solution.final_state(), self.representation())
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.energy_drift.iter().fold(0.0, |m, &(_, d)| m.max(d.abs()))
    }

    /// Energy `E(x, v)` at `t` using the MP velocity.
    pub fn energy_at(&self, t: f64) -> Result<f64> {
        let s = self.state_at(t);
        let v = s.to_velocity(&self.fields)?;
        Ok(0.5 * inner(&self.fields.metric(&s.x), &v, &v) + self.fields.potential(&s.x))
    }
}

pub(crate) fn run<const D: usize>(
    sys: &MpSystem<D>,
    dynamics: Dynamics<D>,
    state0: &PhaseState<D>,
    t_max: f64,
    opts: &FlowOptions,
) -> Result<Trajectory<D>> {
    if state0.rep != dynamics.representation() {
        return Err(MpError::RepresentationMismatch {
            expected: dynamics.representation().name(),
            found: state0.rep.name(),
        });
    }
    let fields = sys.fields.clone();
    let rep = state0.rep;
    let energy = |s: &State<D, 2>| -> Result<f64> {
        let st = PhaseState::unpack(s, rep);
        let v = st.to_velocity(&fields)?;
        Ok(0.5 * inner(&fields.metric(&st.x), &v, &v) + fields.potential(&st.x))
    };
    let y0 = state0.pack();
    let e0 = energy(&y0)?;
    let mut drift = vec![(0.0, 0.0)];
    let mut max_rho = sys.domain.rho(&state0.x);
    let domain = &sys.domain;
    // keep single steps well inside the domain scale
    let speed = dynamics.eval(&sys.fields, sys.k, &y0)?.column(0).norm();
    let mut ode_opts = opts.ode;
    if speed > 0.0 {
        ode_opts.h_max = ode_opts.h_max.min(0.1 * sys.domain.diameter() / speed);
    }
    let solution = ode::integrate(
        |_, s| dynamics.eval(&sys.fields, sys.k, s),
        0.0,
        y0,
        t_max,
        &ode_opts,
        |t, s| {
            let x: Point<D> = s.column(0).into_owned();
            let r = domain.rho(&x);
            let exited = opts.stop_at_boundary && r < 0.0 && max_rho > 0.0;
            max_rho = max_rho.max(r);
            if !exited && !domain.in_bbox(&x) {
                return Err(MpError::LeftBoundingBox { t });
            }
            drift.push((t, energy(s)? - e0));
            Ok(exited)
        },
    )?;
    Ok(Trajectory {
        fields: sys.fields.clone(),
        k: sys.k,
        dynamics,
        solution,
        energy_drift: drift,
        initial_energy: e0,
    })
}

/// Integrates the MP-flow in `formulation` from `state0` on `[0, t_max]`.
pub fn integrate<const D: usize>(
    sys: &MpSystem<D>,
    formulation: Formulation,
    state0: &PhaseState<D>,
    t_max: f64,
    opts: &FlowOptions,
) -> Result<Trajectory<D>> {
    run(sys, Dynamics::Mp(formulation), state0, t_max, opts)
}
