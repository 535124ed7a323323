//! Fourth-order central finite differences.
//!
//! The stencil is `(-f(x+2h) + 8f(x+h) - 8f(x-h) + f(x-2h)) / 12h` with the
//! default step `h = 1e-5 (1 + |x|)`.

use nalgebra::{SMatrix, SVector};

/// Default relative step used throughout the crate.
pub const DEFAULT_STEP: f64 = 1e-5;

pub fn step_for<const D: usize>(x: &SVector<f64, D>, scale: f64) -> f64 {
    scale * (1.0 + x.norm())
}

/// Derivative of a scalar function of one variable.
pub fn derivative(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (-f(t + 2.0 * h) + 8.0 * f(t + h) - 8.0 * f(t - h) + f(t - 2.0 * h)) / (12.0 * h)
}

/// Partial derivative along coordinate `i` of any value supporting linear
/// combinations (scalars, vectors, matrices).
pub fn partial<const D: usize, T, F>(f: &F, x: &SVector<f64, D>, i: usize, h: f64) -> T
where
    F: Fn(&SVector<f64, D>) -> T,
    T: std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut p1 = *x;
    let mut p2 = *x;
    let mut m1 = *x;
    let mut m2 = *x;
    p1[i] += h;
    p2[i] += 2.0 * h;
    m1[i] -= h;
    m2[i] -= 2.0 * h;
    (f(&m2) - f(&p2) + (f(&p1) - f(&m1)) * 8.0) * (1.0 / (12.0 * h))
}

pub fn gradient<const D: usize>(
    f: impl Fn(&SVector<f64, D>) -> f64,
    x: &SVector<f64, D>,
    h: f64,
) -> SVector<f64, D> {
    SVector::from_fn(|i, _| partial(&f, x, i, h))
}

/// Jacobian `J[(i, j)] = ∂f_i/∂x_j`.
pub fn jacobian<const D: usize, const M: usize>(
    f: impl Fn(&SVector<f64, D>) -> SVector<f64, M>,
    x: &SVector<f64, D>,
    h: f64,
) -> SMatrix<f64, M, D> {
    let mut jac = SMatrix::<f64, M, D>::zeros();
    for j in 0..D {
        jac.set_column(j, &partial(&f, x, j, h));
    }
    jac
}

/// Hessian of a scalar function.
pub fn hessian<const D: usize>(
    f: impl Fn(&SVector<f64, D>) -> f64,
    x: &SVector<f64, D>,
    h: f64,
) -> SMatrix<f64, D, D> {
    let grad = |y: &SVector<f64, D>| gradient(&f, y, h);
    let jac = jacobian(grad, x, h);
    (jac + jac.transpose()) * 0.5
}
