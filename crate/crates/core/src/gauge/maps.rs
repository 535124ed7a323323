//! Diffeomorphisms of `M` fixing `∂M` pointwise.

use std::sync::Arc;

use crate::geometry::{ChartDomain, Mat, Point};

/// A diffeomorphism `f: M → M` with `f|∂M = id`, together with its Jacobian
/// `J_ij = ∂f^i/∂x^j`.
pub trait BoundaryFixingMap<const D: usize>: Send + Sync {
    fn apply(&self, x: &Point<D>) -> Point<D>;
    fn jacobian(&self, x: &Point<D>) -> Mat<D>;
    fn inverse(&self) -> Arc<dyn BoundaryFixingMap<D>>;

    /// `(f(x), J(x))`; overridden when both come out of one computation.
    fn apply_with_jacobian(&self, x: &Point<D>) -> (Point<D>, Mat<D>) {
        (self.apply(x), self.jacobian(x))
    }

    fn is_identity(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<const D: usize> BoundaryFixingMap<D> for Identity {
    fn apply(&self, x: &Point<D>) -> Point<D> {
        *x
    }

    fn jacobian(&self, _x: &Point<D>) -> Mat<D> {
        Mat::<D>::identity()
    }

    fn inverse(&self) -> Arc<dyn BoundaryFixingMap<D>> {
        Arc::new(Identity)
    }

    fn is_identity(&self) -> bool {
        true
    }
}

fn plane_rotation<const D: usize>(theta: f64) -> (Mat<D>, Mat<D>) {
    let (s, c) = theta.sin_cos();
    let mut r = Mat::<D>::identity();
    let mut dr = Mat::<D>::zeros();
    r[(0, 0)] = c;
    r[(0, 1)] = -s;
    r[(1, 0)] = s;
    r[(1, 1)] = c;
    dr[(0, 0)] = -s;
    dr[(0, 1)] = -c;
    dr[(1, 0)] = c;
    dr[(1, 1)] = -s;
    (r, dr)
}

/// Time-one flow of `X = ρ (a x + b ρ J x)` on the ball `ρ = R² - |x|²`,
/// with `J` the rotation generator of the `(x_1, x_2)` plane.
///
/// In closed form `f(x) = σ(s) R(Δθ(s)) x` with `s = |x|²`. For `a = 0` the
/// Jacobian is the identity along `∂M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralFlow {
    pub a: f64,
    pub b: f64,
    pub radius: f64,
}

impl SpiralFlow {
    pub fn new(a: f64, b: f64, radius: f64) -> Self {
        Self { a, b, radius }
    }

    /// `(σ, σ', Δθ, Δθ')` as functions of `s = |x|²`.
    fn profile(&self, s: f64) -> (f64, f64, f64, f64) {
        let r2 = self.radius * self.radius;
        if self.a.abs() < 1e-12 {
            let gap = r2 - s;
            return (1.0, 0.0, self.b * gap * gap, -2.0 * self.b * gap);
        }
        let e = (2.0 * self.a * r2).exp();
        let den = r2 + s * (e - 1.0);
        let sigma2 = r2 * e / den;
        let sigma = sigma2.sqrt();
        let dsigma = -0.5 * sigma * (e - 1.0) / den;
        let s1 = sigma2 * s;
        let ds1 = r2 * r2 * e / (den * den);
        let k = self.b / (2.0 * self.a);
        let theta = k * (r2 * sigma2.ln() - (s1 - s));
        let dtheta = k * (r2 * 2.0 * dsigma / sigma - (ds1 - 1.0));
        (sigma, dsigma, theta, dtheta)
    }
}

impl<const D: usize> BoundaryFixingMap<D> for SpiralFlow {
    fn apply(&self, x: &Point<D>) -> Point<D> {
        let (sigma, _, theta, _) = self.profile(x.norm_squared());
        plane_rotation::<D>(theta).0 * x * sigma
    }

    fn jacobian(&self, x: &Point<D>) -> Mat<D> {
        self.apply_with_jacobian(x).1
    }

    fn apply_with_jacobian(&self, x: &Point<D>) -> (Point<D>, Mat<D>) {
        let (sigma, dsigma, theta, dtheta) = self.profile(x.norm_squared());
        let (r, dr) = plane_rotation::<D>(theta);
        let rx = r * x;
        let jac = r * sigma + (rx * (2.0 * dsigma) + dr * x * (2.0 * sigma * dtheta)) * x.transpose();
        (rx * sigma, jac)
    }

    fn inverse(&self) -> Arc<dyn BoundaryFixingMap<D>> {
        Arc::new(SpiralFlow { a: -self.a, b: -self.b, radius: self.radius })
    }
}

/// Affine vector field `W(x) = A x + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField<const D: usize> {
    pub matrix: Mat<D>,
    pub shift: Point<D>,
}

impl<const D: usize> AffineField<D> {
    pub fn eval(&self, x: &Point<D>) -> Point<D> {
        self.matrix * x + self.shift
    }

    pub fn negated(&self) -> Self {
        Self { matrix: -self.matrix, shift: -self.shift }
    }
}

/// Time-one map of `X = ρ W` by classical RK4 with `steps` uniform steps.
///
/// The Jacobian is the exact derivative of the discrete map, propagated
/// through the Runge–Kutta stages.
#[derive(Clone)]
pub struct GeneratorFlow<const D: usize> {
    pub domain: ChartDomain<D>,
    pub field: AffineField<D>,
    pub steps: usize,
}

impl<const D: usize> GeneratorFlow<D> {
    pub fn new(domain: ChartDomain<D>, field: AffineField<D>, steps: usize) -> Self {
        Self { domain, field, steps: steps.max(1) }
    }

    fn generator(&self, x: &Point<D>) -> (Point<D>, Mat<D>) {
        let rho = self.domain.rho(x);
        let w = self.field.eval(x);
        let dx = w * self.domain.rho_gradient(x).transpose() + self.field.matrix * rho;
        (w * rho, dx)
    }

    fn flow(&self, x: &Point<D>, with_jacobian: bool) -> (Point<D>, Mat<D>) {
        let h = 1.0 / self.steps as f64;
        let mut y = *x;
        let mut jac = Mat::<D>::identity();
        for _ in 0..self.steps {
            let (k1, d1) = self.generator(&y);
            let (k2, d2) = self.generator(&(y + k1 * (0.5 * h)));
            let (k3, d3) = self.generator(&(y + k2 * (0.5 * h)));
            let (k4, d4) = self.generator(&(y + k3 * h));
            if with_jacobian {
                let j1 = d1 * jac;
                let j2 = d2 * (jac + j1 * (0.5 * h));
                let j3 = d3 * (jac + j2 * (0.5 * h));
                let j4 = d4 * (jac + j3 * h);
                jac += (j1 + j2 * 2.0 + j3 * 2.0 + j4) * (h / 6.0);
            }
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        (y, jac)
    }
}

impl<const D: usize> BoundaryFixingMap<D> for GeneratorFlow<D> {
    fn apply(&self, x: &Point<D>) -> Point<D> {
        self.flow(x, false).0
    }

    fn jacobian(&self, x: &Point<D>) -> Mat<D> {
        self.flow(x, true).1
    }

    fn apply_with_jacobian(&self, x: &Point<D>) -> (Point<D>, Mat<D>) {
        self.flow(x, true)
    }

    fn inverse(&self) -> Arc<dyn BoundaryFixingMap<D>> {
        let reversed = GeneratorFlow { field: self.field.negated(), ..self.clone() };
        Arc::new(Inverted { map: Arc::new(self.clone()), guess: Arc::new(reversed) })
    }
}

/// `f1 ∘ f2`.
#[derive(Clone)]
pub struct Composed<const D: usize> {
    pub outer: Arc<dyn BoundaryFixingMap<D>>,
    pub inner: Arc<dyn BoundaryFixingMap<D>>,
}

impl<const D: usize> BoundaryFixingMap<D> for Composed<D> {
    fn apply(&self, x: &Point<D>) -> Point<D> {
        self.outer.apply(&self.inner.apply(x))
    }

    fn jacobian(&self, x: &Point<D>) -> Mat<D> {
        self.apply_with_jacobian(x).1
    }

    fn apply_with_jacobian(&self, x: &Point<D>) -> (Point<D>, Mat<D>) {
        let (y, j2) = self.inner.apply_with_jacobian(x);
        let (z, j1) = self.outer.apply_with_jacobian(&y);
        (z, j1 * j2)
    }

    fn inverse(&self) -> Arc<dyn BoundaryFixingMap<D>> {
        Arc::new(Composed { outer: self.inner.inverse(), inner: self.outer.inverse() })
    }

    fn is_identity(&self) -> bool {
        self.outer.is_identity() && self.inner.is_identity()
    }
}

/// `f⁻¹`, evaluated by Newton iteration started from an approximate inverse.
#[derive(Clone)]
pub struct Inverted<const D: usize> {
    pub map: Arc<dyn BoundaryFixingMap<D>>,
    pub guess: Arc<dyn BoundaryFixingMap<D>>,
}

impl<const D: usize> Inverted<D> {
    fn solve(&self, x: &Point<D>) -> (Point<D>, Mat<D>) {
        let mut z = self.guess.apply(x);
        let (mut fz, mut jac) = self.map.apply_with_jacobian(&z);
        for _ in 0..30 {
            let r = fz - x;
            if r.norm() <= 1e-15 * (1.0 + x.norm()) {
                break;
            }
            match crate::geometry::solve(&jac, &r) {
                Some(dz) => z -= dz,
                None => break,
            }
            (fz, jac) = self.map.apply_with_jacobian(&z);
        }
        let inv = jac.try_inverse().unwrap_or_else(Mat::<D>::identity);
        (z, inv)
    }
}

impl<const D: usize> BoundaryFixingMap<D> for Inverted<D> {
    fn apply(&self, x: &Point<D>) -> Point<D> {
        self.solve(x).0
    }

    fn jacobian(&self, x: &Point<D>) -> Mat<D> {
        self.solve(x).1
    }

    fn apply_with_jacobian(&self, x: &Point<D>) -> (Point<D>, Mat<D>) {
        self.solve(x)
    }

    fn inverse(&self) -> Arc<dyn BoundaryFixingMap<D>> {
        self.map.clone()
    }
}
