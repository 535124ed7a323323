//! Numerical toolkit for magnetic-potential (MP) systems on disk-type chart
//! domains.
//!
//! An MP-system is a Riemannian metric `g`, a magnetic potential `α` (so the
//! magnetic 2-form is `Ω = dα`) and a scalar potential `U`, studied at a fixed
//! energy level `k > max U`. The crate integrates the MP-flow in several
//! equivalent formulations, computes boundary data (scattering relation and
//! boundary action function), implements the reduction to a pure magnetic
//! system and the k-gauge group acting on MP-systems.
//!
//! Dimension is a const generic (`D = 2` or `D = 3`); all small tensors are
//! stack-allocated `nalgebra` matrices.

pub mod action;
pub mod catalog;
pub mod error;
pub mod fd;
pub mod flow;
pub mod gauge;
pub mod geometry;
pub mod ode;
pub mod quadrature;
pub mod systems;

pub use error::{MpError, Result};
pub use geometry::{
    ChartDomain, DerivativeMode, FieldModel, Mat, Point, ScalarField, ScenarioFields,
};
pub use systems::{HamiltonianKind, HamiltonianSpec, MpSystem};
pub use flow::{Formulation, PhaseState, Representation, ScatteringRecord, Trajectory};
pub use action::ActionValue;
pub use gauge::GaugeTransform;
