//! Chart domains, tensor-field evaluation and the pointwise
//! differential-geometric primitives used by the flows.

mod domain;
mod fields;

pub use domain::{Ball, ChartDomain, DefiningFunction, DentedBall, BOUNDARY_TOLERANCE};
pub use fields::{
    Constant, DerivativeMode, FieldJet, FieldModel, FnScalar, ScalarField, ScenarioFields,
};

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::error::{MpError, Result};

/// A point (or tangent vector, or covector) in chart coordinates.
pub type Point<const D: usize> = SVector<f64, D>;
/// A `D x D` matrix (metric, Jacobian, Lorentz force...).
pub type Mat<const D: usize> = SMatrix<f64, D, D>;

/// `g(x, u, v) = u^T g(x) v`.
pub fn inner<const D: usize>(g: &Mat<D>, u: &Point<D>, v: &Point<D>) -> f64 {
    (u.transpose() * g * v)[0]
}

pub fn metric_at<const D: usize>(fields: &ScenarioFields<D>, x: &Point<D>) -> Result<Mat<D>> {
    fields.checked_metric(x).map(|(g, _)| g)
}

/// `Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{jl} - ∂_l g_{jk})`, indexed as
/// `gamma[i][(j, k)]`.
pub fn christoffel_at<const D: usize>(
    fields: &ScenarioFields<D>,
    x: &Point<D>,
) -> Result<[Mat<D>; D]> {
    Ok(fields.jet(x)?.christoffel())
}

/// Magnetic 2-form `Ω = dα`.
pub fn two_form_at<const D: usize>(fields: &ScenarioFields<D>, x: &Point<D>) -> Mat<D> {
    let d = fields.one_form_partials(x);
    d - d.transpose()
}

/// Lorentz force `Y^i_j`, the `g`-antisymmetric endomorphism with
/// `Ω(u, v) = <Y u, v>_g`.
pub fn lorentz_at<const D: usize>(fields: &ScenarioFields<D>, x: &Point<D>) -> Result<Mat<D>> {
    let (_, g_inv) = fields.checked_metric(x)?;
    Ok(g_inv * two_form_at(fields, x).transpose())
}

/// `g`-gradient of the potential, `g^{ij} ∂_j U`.
pub fn grad_at<const D: usize>(fields: &ScenarioFields<D>, x: &Point<D>) -> Result<Point<D>> {
    let (_, g_inv) = fields.checked_metric(x)?;
    Ok(g_inv * fields.potential_gradient(x))
}

fn require_boundary<const D: usize>(domain: &ChartDomain<D>, x: &Point<D>) -> Result<()> {
    let r = domain.rho(x);
    if r.abs() >= BOUNDARY_TOLERANCE {
        return Err(MpError::InvalidParameter(format!(
            "point {:?} is not on the boundary (rho = {r:e})",
            x.as_slice()
        )));
    }
    Ok(())
}

/// Inward `g`-unit normal `ν = g^{-1} dρ / |dρ|_{g^{-1}}`.
pub fn inward_normal_at<const D: usize>(
    fields: &ScenarioFields<D>,
    domain: &ChartDomain<D>,
    x: &Point<D>,
) -> Result<Point<D>> {
    require_boundary(domain, x)?;
    let (_, g_inv) = fields.checked_metric(x)?;
    normal_from(domain, &g_inv, x)
}

fn normal_from<const D: usize>(
    domain: &ChartDomain<D>,
    g_inv: &Mat<D>,
    x: &Point<D>,
) -> Result<Point<D>> {
    let drho = domain.rho_gradient(x);
    let norm = inner(g_inv, &drho, &drho).sqrt();
    if !(norm > 1e-8) {
        return Err(MpError::DegenerateBoundary { point: x.as_slice().to_vec() });
    }
    Ok(g_inv * drho / norm)
}

/// Second fundamental form of `∂M` at `x` on the tangential part of `v`.
///
/// Computed as `Λ(v, v) = -∇²ρ(v, v) / |dρ|_{g^{-1}}` with the covariant
/// Hessian, so that convex Euclidean domains have `Λ > 0`.
pub fn second_fundamental_form_at<const D: usize>(
    fields: &ScenarioFields<D>,
    domain: &ChartDomain<D>,
    x: &Point<D>,
    v: &Point<D>,
) -> Result<f64> {
    require_boundary(domain, x)?;
    let jet = fields.jet(x)?;
    let nu = normal_from(domain, &jet.g_inv, x)?;
    let vt = v - nu * inner(&jet.g, v, &nu);
    let drho = domain.rho_gradient(x);
    let gamma = jet.christoffel();
    let mut hess = domain.rho_hessian(x);
    for (k, gk) in gamma.iter().enumerate() {
        hess -= gk * drho[k];
    }
    let norm = inner(&jet.g_inv, &drho, &drho).sqrt();
    Ok(-inner(&hess, &vt, &vt) / norm)
}

/// Solves `m z = b` by LU with partial pivoting.
pub(crate) fn solve<const D: usize>(m: &Mat<D>, b: &Point<D>) -> Option<Point<D>> {
    let z = DMatrix::from_column_slice(D, D, m.as_slice()).lu().solve(&DVector::from_column_slice(b.as_slice()))?;
    Some(Point::<D>::from_column_slice(z.as_slice()))
}

pub(crate) fn determinant<const D: usize>(m: &Mat<D>) -> f64 {
    DMatrix::from_column_slice(D, D, m.as_slice()).determinant()
}

pub(crate) fn min_eigenvalue<const D: usize>(m: &Mat<D>) -> f64 {
    DMatrix::from_column_slice(D, D, m.as_slice()).symmetric_eigenvalues().min()
}

#[cfg(test)]
mod tests;
