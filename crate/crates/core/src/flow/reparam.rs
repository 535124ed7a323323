use crate::error::{MpError, Result};
use crate::geometry::{inner, Point};
use crate::quadrature::gauss_legendre;
use crate::systems::{reduce, MpSystem};

use super::Trajectory;

/// An MP-trajectory reparametrized by `s(t) = ∫ 2(k - U(σ(t))) dt`.
///
/// In this parameter the curve is a unit-speed magnetic geodesic of the
/// reduced system `(2(k - U) g, α)`.
#[derive(Clone)]
pub struct ReducedCurve<const D: usize> {
    traj: Trajectory<D>,
    k: f64,
    /// `s` at every step boundary of `traj`.
    cumulative: Vec<f64>,
}

impl<const D: usize> std::fmt::Debug for ReducedCurve<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReducedCurve").field("length", &self.length()).finish()
    }
}

impl<const D: usize> ReducedCurve<D> {
    fn factor(&self, x: &Point<D>) -> f64 {
        2.0 * (self.k - self.traj.fields.potential(x))
    }

    fn partial(&self, idx: usize, t: f64) -> f64 {
        let step = &self.traj.solution.steps[idx];
        gauss_legendre(|r| self.factor(&step.eval(r).column(0).into_owned()), step.t0, t)
    }

    /// Values of `s` at the integrator step boundaries.
    pub fn breakpoints(&self) -> &[f64] {
        &self.cumulative
    }

    /// Total reduced length `s(T)`.
    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn s_of_t(&self, t: f64) -> f64 {
        let idx = self.traj.solution.step_index(t);
        self.cumulative[idx] + self.partial(idx, t)
    }

    /// Inverse of [`Self::s_of_t`] by safeguarded Newton iteration inside one step.
    pub fn t_of_s(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let idx = self.cumulative.partition_point(|&c| c < s).saturating_sub(1);
        let idx = idx.min(self.traj.solution.steps.len() - 1);
        let step = &self.traj.solution.steps[idx];
        let (mut lo, mut hi) = (step.t0, step.t1());
        let (s_lo, s_hi) = (self.cumulative[idx], self.cumulative[idx + 1]);
        let mut t = if s_hi > s_lo { lo + (hi - lo) * (s - s_lo) / (s_hi - s_lo) } else { lo };
        for _ in 0..50 {
            let r = s_lo + self.partial(idx, t) - s;
            if r.abs() <= 1e-14 * s.abs().max(1.0) {
                break;
            }
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let slope = self.factor(&step.eval(t).column(0).into_owned());
            let next = t - r / slope;
            t = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        t
    }

    pub fn point(&self, s: f64) -> Point<D> {
        self.traj.point_at(self.t_of_s(s))
    }

    /// `dγ/ds = v / (2(k - U))`.
    pub fn velocity(&self, s: f64) -> Result<Point<D>> {
        let t = self.t_of_s(s);
        let x = self.traj.point_at(t);
        Ok(self.traj.velocity_at(t)? / self.factor(&x))
    }

    /// Largest deviation of `|γ'|_G` from 1 over `samples` uniform values of `s`.
    pub fn unit_speed_defect(&self, reduced: &MpSystem<D>, samples: usize) -> Result<f64> {
        let n = samples.max(1);
        let mut worst: f64 = 0.0;
        for j in 0..=n {
            let s = self.length() * j as f64 / n as f64;
            let x = self.point(s);
            let v = self.velocity(s)?;
            let speed = inner(&reduced.fields.metric(&x), &v, &v).sqrt();
            worst = worst.max((speed - 1.0).abs());
        }
        Ok(worst)
    }
}

/// Reparametrizes an MP-trajectory of `sys` as a magnetic geodesic of
/// `reduce(sys)`.
pub fn reparametrize_to_reduced<const D: usize>(
    sys: &MpSystem<D>,
    traj: &Trajectory<D>,
) -> Result<(ReducedCurve<D>, MpSystem<D>)> {
    if !matches!(traj.dynamics, super::Dynamics::Mp(_)) {
        return Err(MpError::InvalidParameter("reparametrization needs an MP-flow trajectory".into()));
    }
    let mut curve = ReducedCurve { traj: traj.clone(), k: sys.k, cumulative: vec![0.0] };
    for (i, step) in traj.solution.steps.iter().enumerate() {
        let next = curve.cumulative[i] + curve.partial(i, step.t1());
        curve.cumulative.push(next);
    }
    Ok((curve, reduce(sys)))
}
