//! Scalar fields used to assemble gauge data.

use std::sync::Arc;

use crate::geometry::{ChartDomain, Point, ScalarField};

use super::maps::BoundaryFixingMap;

/// `ψ(x) = c + l·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineScalar<const D: usize> {
    pub constant: f64,
    pub linear: Point<D>,
}

impl<const D: usize> ScalarField<D> for AffineScalar<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        self.constant + self.linear.dot(x)
    }

    fn gradient(&self, _x: &Point<D>) -> Point<D> {
        self.linear
    }
}

/// `ρ ψ`, which vanishes on `∂M`.
#[derive(Clone)]
pub struct BoundaryVanishing<const D: usize> {
    pub domain: ChartDomain<D>,
    pub psi: Arc<dyn ScalarField<D>>,
}

impl<const D: usize> ScalarField<D> for BoundaryVanishing<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        self.domain.rho(x) * self.psi.value(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        self.domain.rho_gradient(x) * self.psi.value(x) + self.psi.gradient(x) * self.domain.rho(x)
    }
}

/// `exp(c + ρ (m₀ + m·x))`; equal to `e^c` on `∂M`.
#[derive(Clone)]
pub struct ExpFactor<const D: usize> {
    pub domain: ChartDomain<D>,
    pub constant: f64,
    pub interior: f64,
    pub linear: Point<D>,
}

impl<const D: usize> ExpFactor<D> {
    fn exponent(&self, x: &Point<D>) -> f64 {
        self.constant + self.domain.rho(x) * (self.interior + self.linear.dot(x))
    }
}

impl<const D: usize> ScalarField<D> for ExpFactor<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        self.exponent(x).exp()
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let rho = self.domain.rho(x);
        let d = self.domain.rho_gradient(x) * (self.interior + self.linear.dot(x)) + self.linear * rho;
        d * self.exponent(x).exp()
    }
}

/// `h ∘ f`.
#[derive(Clone)]
pub struct Pullback<const D: usize> {
    pub field: Arc<dyn ScalarField<D>>,
    pub map: Arc<dyn BoundaryFixingMap<D>>,
}

impl<const D: usize> ScalarField<D> for Pullback<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        self.field.value(&self.map.apply(x))
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let (y, jac) = self.map.apply_with_jacobian(x);
        jac.transpose() * self.field.gradient(&y)
    }
}

#[derive(Clone)]
pub struct Sum<const D: usize>(pub Arc<dyn ScalarField<D>>, pub Arc<dyn ScalarField<D>>);

impl<const D: usize> ScalarField<D> for Sum<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        self.0.value(x) + self.1.value(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        self.0.gradient(x) + self.1.gradient(x)
    }
}

#[derive(Clone)]
pub struct Product<const D: usize>(pub Arc<dyn ScalarField<D>>, pub Arc<dyn ScalarField<D>>);

impl<const D: usize> ScalarField<D> for Product<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        self.0.value(x) * self.1.value(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        self.0.gradient(x) * self.1.value(x) + self.1.gradient(x) * self.0.value(x)
    }
}

/// `c · h`.
#[derive(Clone)]
pub struct Scaled<const D: usize> {
    pub field: Arc<dyn ScalarField<D>>,
    pub factor: f64,
}

impl<const D: usize> ScalarField<D> for Scaled<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        self.factor * self.field.value(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        self.field.gradient(x) * self.factor
    }
}

/// `1 / h`.
#[derive(Clone)]
pub struct Reciprocal<const D: usize>(pub Arc<dyn ScalarField<D>>);

impl<const D: usize> ScalarField<D> for Reciprocal<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        1.0 / self.0.value(x)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let v = self.0.value(x);
        -self.0.gradient(x) / (v * v)
    }
}
