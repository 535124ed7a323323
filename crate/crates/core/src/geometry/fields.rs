//! Tensor-field descriptions: metric `g`, magnetic potential `α` and scalar
//! potential `U`, with analytic or finite-difference derivatives.

use std::sync::Arc;

use crate::error::{MpError, Result};
use crate::fd;
use crate::geometry::{Mat, Point};

/// Closed-form description of an MP-system's fields on a chart.
///
/// Partial derivatives are optional; when a model provides them they are used
/// in [`DerivativeMode::Analytic`] and serve as a cross-check for the
/// finite-difference path.
pub trait FieldModel<const D: usize>: Send + Sync {
    fn metric(&self, x: &Point<D>) -> Mat<D>;
    /// Components `α_i` of the magnetic potential.
    fn one_form(&self, x: &Point<D>) -> Point<D>;
    fn potential(&self, x: &Point<D>) -> f64;

    /// `[∂_0 g, ∂_1 g, ..]`.
    fn metric_partials(&self, _x: &Point<D>) -> Option<[Mat<D>; D]> {
        None
    }

    /// Matrix with entries `(i, j) = ∂_i α_j`.
    fn one_form_partials(&self, _x: &Point<D>) -> Option<Mat<D>> {
        None
    }

    fn potential_gradient(&self, _x: &Point<D>) -> Option<Point<D>> {
        None
    }
}

/// A smooth scalar function on the chart (elliptic factors, gauge
/// potentials, boundary-vanishing profiles).
pub trait ScalarField<const D: usize>: Send + Sync {
    fn value(&self, x: &Point<D>) -> f64;

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        fd::gradient(|y| self.value(y), x, fd::step_for(x, fd::DEFAULT_STEP))
    }
}

/// Closure-backed scalar field with optional analytic gradient.
pub struct FnScalar<const D: usize, F, G = fn(&Point<D>) -> Point<D>> {
    value: F,
    gradient: Option<G>,
}

impl<const D: usize, F> FnScalar<D, F> {
    pub fn new(value: F) -> Self {
        Self { value, gradient: None }
    }
}

impl<const D: usize, F, G> FnScalar<D, F, G> {
    pub fn with_gradient(value: F, gradient: G) -> Self {
        Self { value, gradient: Some(gradient) }
    }
}

impl<const D: usize, F, G> ScalarField<D> for FnScalar<D, F, G>
where
    F: Fn(&Point<D>) -> f64 + Send + Sync,
    G: Fn(&Point<D>) -> Point<D> + Send + Sync,
{
    fn value(&self, x: &Point<D>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        match &self.gradient {
            Some(g) => g(x),
            None => fd::gradient(|y| (self.value)(y), x, fd::step_for(x, fd::DEFAULT_STEP)),
        }
    }
}

/// Constant scalar field.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl<const D: usize> ScalarField<D> for Constant {
    fn value(&self, _x: &Point<D>) -> f64 {
        self.0
    }

    fn gradient(&self, _x: &Point<D>) -> Point<D> {
        Point::<D>::zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivativeMode {
    /// Model-supplied closed forms (falls back to finite differences for
    /// models without them).
    Analytic,
    /// Fourth-order central differences with step `scale * (1 + |x|)`.
    FiniteDifference { scale: f64 },
}

impl Default for DerivativeMode {
    fn default() -> Self {
        DerivativeMode::FiniteDifference { scale: fd::DEFAULT_STEP }
    }
}

/// Field values and first derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct FieldJet<const D: usize> {
    pub g: Mat<D>,
    pub g_inv: Mat<D>,
    pub dg: [Mat<D>; D],
    pub alpha: Point<D>,
    /// `(i, j) = ∂_i α_j`.
    pub dalpha: Mat<D>,
    pub u: f64,
    pub du: Point<D>,
}

impl<const D: usize> FieldJet<D> {
    /// `Ω_ij = ∂_i α_j - ∂_j α_i`.
    pub fn two_form(&self) -> Mat<D> {
        self.dalpha - self.dalpha.transpose()
    }

    /// `∂_k g^{-1} = -g^{-1} (∂_k g) g^{-1}`.
    pub fn inverse_metric_partial(&self, k: usize) -> Mat<D> {
        -(self.g_inv * self.dg[k] * self.g_inv)
    }

    /// Christoffel symbols: `gamma[i][(j, k)] = Γ^i_{jk}`.
    pub fn christoffel(&self) -> [Mat<D>; D] {
        // lowered symbols Γ_{l jk} = ½(∂_j g_{lk} + ∂_k g_{jl} - ∂_l g_{jk})
        let lowered: [Mat<D>; D] = std::array::from_fn(|l| {
            Mat::<D>::from_fn(|j, k| 0.5 * (self.dg[j][(l, k)] + self.dg[k][(j, l)] - self.dg[l][(j, k)]))
        });
        std::array::from_fn(|i| {
            let mut m = Mat::<D>::zeros();
            for (l, low) in lowered.iter().enumerate() {
                m += low * self.g_inv[(i, l)];
            }
            m
        })
    }

    /// Lorentz force `Y^i_j = g^{ik} Ω_{jk}`, so that `Ω(u, v) = <Y u, v>_g`.
    pub fn lorentz(&self) -> Mat<D> {
        self.g_inv * self.two_form().transpose()
    }

    /// `g^{ij} ∂_j U`.
    pub fn potential_gradient(&self) -> Point<D> {
        self.g_inv * self.du
    }
}

/// A field model bundled with the derivative mode used to evaluate it.
#[derive(Clone)]
pub struct ScenarioFields<const D: usize> {
    model: Arc<dyn FieldModel<D>>,
    mode: DerivativeMode,
}

impl<const D: usize> std::fmt::Debug for ScenarioFields<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioFields").field("mode", &self.mode).finish_non_exhaustive()
    }
}

impl<const D: usize> ScenarioFields<D> {
    pub fn new(model: Arc<dyn FieldModel<D>>) -> Self {
        Self { model, mode: DerivativeMode::default() }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn model(&self) -> &Arc<dyn FieldModel<D>> {
        &self.model
    }

    pub fn metric(&self, x: &Point<D>) -> Mat<D> {
        self.model.metric(x)
    }

    pub fn one_form(&self, x: &Point<D>) -> Point<D> {
        self.model.one_form(x)
    }

    pub fn potential(&self, x: &Point<D>) -> f64 {
        self.model.potential(x)
    }

    fn fd_step(&self, x: &Point<D>) -> f64 {
        match self.mode {
            DerivativeMode::FiniteDifference { scale } => fd::step_for(x, scale),
            DerivativeMode::Analytic => fd::step_for(x, fd::DEFAULT_STEP),
        }
    }

    pub fn metric_partials(&self, x: &Point<D>) -> [Mat<D>; D] {
        if self.mode == DerivativeMode::Analytic {
            if let Some(d) = self.model.metric_partials(x) {
                return d;
            }
        }
        let h = self.fd_step(x);
        let f = |y: &Point<D>| self.model.metric(y);
        std::array::from_fn(|k| fd::partial(&f, x, k, h))
    }

    pub fn one_form_partials(&self, x: &Point<D>) -> Mat<D> {
        if self.mode == DerivativeMode::Analytic {
            if let Some(d) = self.model.one_form_partials(x) {
                return d;
            }
        }
        let h = self.fd_step(x);
        let f = |y: &Point<D>| self.model.one_form(y);
        // rows indexed by the differentiation direction
        fd::jacobian(f, x, h).transpose()
    }

    pub fn potential_gradient(&self, x: &Point<D>) -> Point<D> {
        if self.mode == DerivativeMode::Analytic {
            if let Some(d) = self.model.potential_gradient(x) {
                return d;
            }
        }
        fd::gradient(|y| self.model.potential(y), x, self.fd_step(x))
    }

    /// Metric at `x`, failing when it is not symmetric positive definite.
    pub fn checked_metric(&self, x: &Point<D>) -> Result<(Mat<D>, Mat<D>)> {
        let g = self.model.metric(x);
        let g = (g + g.transpose()) * 0.5;
        match g.cholesky() {
            Some(ch) => Ok((g, ch.inverse())),
            None => Err(MpError::DegenerateMetric {
                point: x.as_slice().to_vec(),
                min_eigenvalue: super::min_eigenvalue(&g),
            }),
        }
    }

    pub fn jet(&self, x: &Point<D>) -> Result<FieldJet<D>> {
        let (g, g_inv) = self.checked_metric(x)?;
        Ok(FieldJet {
            g,
            g_inv,
            dg: self.metric_partials(x),
            alpha: self.model.one_form(x),
            dalpha: self.one_form_partials(x),
            u: self.model.potential(x),
            du: self.potential_gradient(x),
        })
    }
}
