//! The MP-system record, its energy and Hamiltonians, the Legendre transform,
//! the reduction to a magnetic system and the boundary convexity margin.

use std::sync::Arc;

use crate::error::{MpError, Result};
use crate::geometry::{
    inner, inward_normal_at, lorentz_at, second_fundamental_form_at, ChartDomain, FieldModel,
    Mat, Point, ScalarField, ScenarioFields,
};

/// Safety margin added to the sampled maximum of `U`.
pub const POTENTIAL_MARGIN: f64 = 1e-6;

/// Grid resolution per axis used to estimate `max_M U`.
pub const DEFAULT_POTENTIAL_GRID: usize = 201;

/// An MP-system `(g, α, U)` on a chart domain, at energy level `k > max U`.
#[derive(Clone, Debug)]
pub struct MpSystem<const D: usize> {
    pub domain: ChartDomain<D>,
    pub fields: ScenarioFields<D>,
    pub k: f64,
    max_potential: f64,
}

impl<const D: usize> MpSystem<D> {
    /// Builds a system, checking the metric on sampled interior points and
    /// `k > max U + 1e-6` on a `201^D` grid.
    pub fn new(domain: ChartDomain<D>, fields: ScenarioFields<D>, k: f64) -> Result<Self> {
        Self::with_grid(domain, fields, k, DEFAULT_POTENTIAL_GRID)
    }

    pub fn with_grid(
        domain: ChartDomain<D>,
        fields: ScenarioFields<D>,
        k: f64,
        grid: usize,
    ) -> Result<Self> {
        if !k.is_finite() {
            return Err(MpError::InvalidParameter(format!("energy level {k} is not finite")));
        }
        domain.check_regular_boundary(64)?;
        for x in domain.interior_samples(256, 0.0) {
            fields.checked_metric(&x)?;
        }
        let (u_max, at) = sampled_max_potential(&domain, &fields, grid);
        if k <= u_max + POTENTIAL_MARGIN {
            return Err(MpError::BelowPotential { k, potential: u_max, point: at.as_slice().to_vec() });
        }
        Ok(Self { domain, fields, k, max_potential: u_max })
    }

    /// Builds a system whose standing assumption is known to hold by
    /// construction (reductions, gauge images).
    pub(crate) fn from_parts(
        domain: ChartDomain<D>,
        fields: ScenarioFields<D>,
        k: f64,
        max_potential: f64,
    ) -> Self {
        Self { domain, fields, k, max_potential }
    }

    /// Sampled `max_M U` (without the safety margin).
    pub fn max_potential(&self) -> f64 {
        self.max_potential
    }

    /// Smallest speed `sqrt(2(k - max U))` on the energy level.
    pub fn min_speed(&self) -> f64 {
        (2.0 * (self.k - self.max_potential)).sqrt()
    }

    /// Default no-exit horizon `100 diam(M) / min speed`.
    pub fn default_horizon(&self) -> f64 {
        100.0 * self.domain.diameter() / self.min_speed()
    }

    pub fn with_energy(&self, k: f64) -> Result<Self> {
        if k <= self.max_potential + POTENTIAL_MARGIN {
            return Err(MpError::BelowPotential { k, potential: self.max_potential, point: vec![] });
        }
        Ok(Self { k, ..self.clone() })
    }
}

fn sampled_max_potential<const D: usize>(
    domain: &ChartDomain<D>,
    fields: &ScenarioFields<D>,
    grid: usize,
) -> (f64, Point<D>) {
    let (lo, hi) = domain.bbox();
    let grid = grid.max(2);
    let total = grid.pow(D as u32);
    let mut best = (f64::NEG_INFINITY, domain.center());
    for flat in 0..total {
        let mut rem = flat;
        let x = Point::<D>::from_fn(|i, _| {
            let idx = rem % grid;
            rem /= grid;
            lo[i] + (hi[i] - lo[i]) * idx as f64 / (grid - 1) as f64
        });
        if domain.rho(&x) >= 0.0 {
            let u = fields.potential(&x);
            if u > best.0 {
                best = (u, x);
            }
        }
    }
    for x in domain.boundary_grid(4 * grid) {
        let u = fields.potential(&x);
        if u > best.0 {
            best = (u, x);
        }
    }
    best
}

/// `E(x, v) = ½|v|²_g + U(x)`.
pub fn energy<const D: usize>(sys: &MpSystem<D>, x: &Point<D>, v: &Point<D>) -> f64 {
    0.5 * inner(&sys.fields.metric(x), v, v) + sys.fields.potential(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// `H = ½|ξ + α|² + U`.
    Standard,
    /// `H̃_{μ,k} = μ/2 |ξ + α|² + μ(U - k) + k`.
    Tilde,
    /// `Ĥ_k = k / (2(k - U)) |ξ + α|²`.
    Hat,
    /// `H_r = |ξ + α|² / (4(k - U))`, the reduced magnetic Hamiltonian.
    Reduced,
}

/// A member of the Hamiltonian family at level `k`.
#[derive(Clone)]
pub struct HamiltonianSpec<const D: usize> {
    pub kind: HamiltonianKind,
    pub mu: Option<Arc<dyn ScalarField<D>>>,
    pub k: f64,
}

impl<const D: usize> HamiltonianSpec<D> {
    pub fn standard(k: f64) -> Self {
        Self { kind: HamiltonianKind::Standard, mu: None, k }
    }

    pub fn tilde(mu: Arc<dyn ScalarField<D>>, k: f64) -> Self {
        Self { kind: HamiltonianKind::Tilde, mu: Some(mu), k }
    }

    pub fn hat(k: f64) -> Self {
        Self { kind: HamiltonianKind::Hat, mu: None, k }
    }

    pub fn reduced(k: f64) -> Self {
        Self { kind: HamiltonianKind::Reduced, mu: None, k }
    }
}

/// Evaluates the requested Hamiltonian at the covector `xi`.
pub fn hamiltonian<const D: usize>(
    sys: &MpSystem<D>,
    spec: &HamiltonianSpec<D>,
    x: &Point<D>,
    xi: &Point<D>,
) -> Result<f64> {
    let (_, g_inv) = sys.fields.checked_metric(x)?;
    let eta = xi + sys.fields.one_form(x);
    let kinetic = inner(&g_inv, &eta, &eta);
    let u = sys.fields.potential(x);
    let k = spec.k;
    let gap = || {
        if k - u > 0.0 {
            Ok(k - u)
        } else {
            Err(MpError::BelowPotential { k, potential: u, point: x.as_slice().to_vec() })
        }
    };
    match spec.kind {
        HamiltonianKind::Standard => Ok(0.5 * kinetic + u),
        HamiltonianKind::Tilde => {
            let mu = spec
                .mu
                .as_ref()
                .ok_or_else(|| MpError::Config("H_tilde requires an elliptic factor mu".into()))?
                .value(x);
            Ok(0.5 * mu * kinetic + mu * (u - k) + k)
        }
        HamiltonianKind::Hat => Ok(k / (2.0 * gap()?) * kinetic),
        HamiltonianKind::Reduced => Ok(kinetic / (4.0 * gap()?)),
    }
}

/// Elliptic factors built from the potential: `k/(k - U)` (for `Ĥ_k`) and
/// `1/(2(k - U))` (for `H_r`).
#[derive(Clone)]
pub struct PotentialFactor<const D: usize> {
    fields: ScenarioFields<D>,
    k: f64,
    kind: HamiltonianKind,
}

impl<const D: usize> PotentialFactor<D> {
    pub fn hat(sys: &MpSystem<D>) -> Self {
        Self { fields: sys.fields.clone(), k: sys.k, kind: HamiltonianKind::Hat }
    }

    pub fn reduced(sys: &MpSystem<D>) -> Self {
        Self { fields: sys.fields.clone(), k: sys.k, kind: HamiltonianKind::Reduced }
    }
}

impl<const D: usize> ScalarField<D> for PotentialFactor<D> {
    fn value(&self, x: &Point<D>) -> f64 {
        let gap = self.k - self.fields.potential(x);
        match self.kind {
            HamiltonianKind::Hat => self.k / gap,
            _ => 0.5 / gap,
        }
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let gap = self.k - self.fields.potential(x);
        let du = self.fields.potential_gradient(x);
        match self.kind {
            HamiltonianKind::Hat => du * (self.k / (gap * gap)),
            _ => du * (0.5 / (gap * gap)),
        }
    }
}

/// Legendre transform `ξ = g v - α`.
pub fn legendre<const D: usize>(sys: &MpSystem<D>, x: &Point<D>, v: &Point<D>) -> Point<D> {
    sys.fields.metric(x) * v - sys.fields.one_form(x)
}

/// Inverse Legendre transform `v = g^{-1}(ξ + α)`.
pub fn legendre_inv<const D: usize>(
    sys: &MpSystem<D>,
    x: &Point<D>,
    xi: &Point<D>,
) -> Result<Point<D>> {
    let (_, g_inv) = sys.fields.checked_metric(x)?;
    Ok(g_inv * (xi + sys.fields.one_form(x)))
}

/// Fields of the reduced magnetic system `(2(k - U) g, α, 0)`.
struct ReducedModel<const D: usize> {
    base: ScenarioFields<D>,
    k: f64,
}

impl<const D: usize> FieldModel<D> for ReducedModel<D> {
    fn metric(&self, x: &Point<D>) -> Mat<D> {
        self.base.metric(x) * (2.0 * (self.k - self.base.potential(x)))
    }

    fn one_form(&self, x: &Point<D>) -> Point<D> {
        self.base.one_form(x)
    }

    fn potential(&self, _x: &Point<D>) -> f64 {
        0.0
    }

    fn metric_partials(&self, x: &Point<D>) -> Option<[Mat<D>; D]> {
        let g = self.base.metric(x);
        let dg = self.base.metric_partials(x);
        let du = self.base.potential_gradient(x);
        let gap = 2.0 * (self.k - self.base.potential(x));
        Some(std::array::from_fn(|i| dg[i] * gap - g * (2.0 * du[i])))
    }

    fn one_form_partials(&self, x: &Point<D>) -> Option<Mat<D>> {
        Some(self.base.one_form_partials(x))
    }

    fn potential_gradient(&self, _x: &Point<D>) -> Option<Point<D>> {
        Some(Point::<D>::zeros())
    }
}

/// Reduced magnetic system `(G, α) = (2(k - U) g, α)` at energy `1/2`.
pub fn reduce<const D: usize>(sys: &MpSystem<D>) -> MpSystem<D> {
    let model = Arc::new(ReducedModel { base: sys.fields.clone(), k: sys.k });
    let fields = ScenarioFields::new(model).with_mode(sys.fields.mode());
    MpSystem::from_parts(sys.domain.clone(), fields, 0.5, 0.0)
}

/// The vector `sqrt(2(k - U)) u / |u|_g` on the energy sphere `S^k_x M`.
pub fn sphere_lift<const D: usize>(sys: &MpSystem<D>, x: &Point<D>, u: &Point<D>) -> Result<Point<D>> {
    let u_x = sys.fields.potential(x);
    if sys.k - u_x <= 0.0 {
        return Err(MpError::BelowPotential { k: sys.k, potential: u_x, point: x.as_slice().to_vec() });
    }
    let norm = inner(&sys.fields.metric(x), u, u).sqrt();
    if !(norm > 0.0) {
        return Err(MpError::InvalidParameter("cannot lift the zero vector".into()));
    }
    Ok(u * ((2.0 * (sys.k - u_x)).sqrt() / norm))
}

/// `Λ(x, v) - <Y v, ν>_g + dU(ν)` at a boundary point.
///
/// `v` is projected to `T_x ∂M` and rescaled onto `S^k_x M` first; a positive
/// value is the pointwise strict MP-convexity inequality.
pub fn mp_convexity_margin<const D: usize>(
    sys: &MpSystem<D>,
    x: &Point<D>,
    v: &Point<D>,
) -> Result<f64> {
    let fields = &sys.fields;
    let nu = inward_normal_at(fields, &sys.domain, x)?;
    let g = fields.metric(x);
    let tangent = v - nu * inner(&g, v, &nu);
    let v = sphere_lift(sys, x, &tangent)?;
    let lambda = second_fundamental_form_at(fields, &sys.domain, x, &v)?;
    let y = lorentz_at(fields, x)?;
    let force = inner(&g, &(y * v), &nu);
    let du_nu = fields.potential_gradient(x).dot(&nu);
    Ok(lambda - force + du_nu)
}

/// A boundary point, a tangent vector on `S^k` and its convexity margin.
#[derive(Debug, Clone)]
pub struct ConvexitySample<const D: usize> {
    pub x: Point<D>,
    pub v: Point<D>,
    pub margin: f64,
}

/// Margins at `n_points` boundary grid points, with `directions` tangent
/// directions each (in 2D the two unit tangents are used whatever
/// `directions` is).
pub fn sample_convexity_margins<const D: usize>(
    sys: &MpSystem<D>,
    n_points: usize,
    directions: usize,
) -> Result<Vec<ConvexitySample<D>>> {
    let mut out = Vec::new();
    for x in sys.domain.boundary_grid(n_points) {
        let drho = sys.domain.rho_gradient(&x).normalize();
        // Euclidean tangent frame; the margin projects g-orthogonally anyway
        let mut basis = Vec::new();
        for i in 0..D {
            let mut e = Point::<D>::zeros();
            e[i] = 1.0;
            let mut t = e - drho * drho.dot(&e);
            for b in &basis {
                let b: &Point<D> = b;
                t -= b * b.dot(&t);
            }
            if t.norm() > 1e-6 {
                basis.push(t.normalize());
            }
            if basis.len() == D - 1 {
                break;
            }
        }
        let dirs: Vec<Point<D>> = if D == 2 {
            vec![basis[0], -basis[0]]
        } else {
            (0..directions.max(1))
                .map(|j| {
                    let a = 2.0 * std::f64::consts::PI * j as f64 / directions.max(1) as f64;
                    basis[0] * a.cos() + basis[1] * a.sin()
                })
                .collect()
        };
        for d in dirs {
            let margin = mp_convexity_margin(sys, &x, &d)?;
            let nu = inward_normal_at(&sys.fields, &sys.domain, &x)?;
            let g = sys.fields.metric(&x);
            let v = sphere_lift(sys, &x, &(d - nu * inner(&g, &d, &nu)))?;
            out.push(ConvexitySample { x, v, margin });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
