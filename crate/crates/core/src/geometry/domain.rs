//! Disk-type chart domains `M = {rho >= 0}` and their boundary parametrization.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{MpError, Result};
use crate::fd;
use crate::geometry::{Mat, Point};

/// Points with `|rho| < BOUNDARY_TOLERANCE` count as boundary points.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// A defining function `rho` with `M = {rho >= 0}`.
pub trait DefiningFunction<const D: usize>: Send + Sync {
    fn value(&self, x: &Point<D>) -> f64;

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        fd::gradient(|y| self.value(y), x, fd::step_for(x, fd::DEFAULT_STEP))
    }

    fn hessian(&self, x: &Point<D>) -> Mat<D> {
        fd::hessian(|y| self.value(y), x, fd::step_for(x, 1e-3))
    }
}

/// `rho = R^2 - |x|^2`.
#[derive(Debug, Clone, Copy)]
pub struct Ball {
    pub radius: f64,
}

impl<const D: usize> DefiningFunction<D> for Ball {
    fn value(&self, x: &Point<D>) -> f64 {
        self.radius * self.radius - x.norm_squared()
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        -2.0 * x
    }

    fn hessian(&self, _x: &Point<D>) -> Mat<D> {
        Mat::<D>::identity() * -2.0
    }
}

/// A ball with a Gaussian dent pushed in at `(R, 0, ..)`:
/// `rho = R^2 - |x|^2 - depth * exp(-|x - R e_1|^2 / width^2)`.
#[derive(Debug, Clone, Copy)]
pub struct DentedBall {
    pub radius: f64,
    pub depth: f64,
    pub width: f64,
}

impl DentedBall {
    fn bump<const D: usize>(&self, x: &Point<D>) -> (f64, Point<D>) {
        let mut d = *x;
        d[0] -= self.radius;
        let w2 = self.width * self.width;
        (self.depth * (-d.norm_squared() / w2).exp(), d / w2)
    }
}

impl<const D: usize> DefiningFunction<D> for DentedBall {
    fn value(&self, x: &Point<D>) -> f64 {
        self.radius * self.radius - x.norm_squared() - self.bump(x).0
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let (b, d) = self.bump(x);
        -2.0 * x + d * (2.0 * b)
    }

    fn hessian(&self, x: &Point<D>) -> Mat<D> {
        let (b, d) = self.bump(x);
        let w2 = self.width * self.width;
        // bump'' = b (4 d d^T - 2 I / w^2) with d already divided by w^2
        let bump_hess = (d * d.transpose() * 4.0 - Mat::<D>::identity() * (2.0 / w2)) * b;
        Mat::<D>::identity() * -2.0 - bump_hess
    }
}

/// A star-shaped chart domain with its defining function and sampling box.
#[derive(Clone)]
pub struct ChartDomain<const D: usize> {
    rho: Arc<dyn DefiningFunction<D>>,
    center: Point<D>,
    reach: f64,
    bbox_min: Point<D>,
    bbox_max: Point<D>,
}

impl<const D: usize> std::fmt::Debug for ChartDomain<D> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartDomain")
            .field("dim", &D)
            .field("center", &self.center.as_slice())
            .field("reach", &self.reach)
            .finish()
    }
}

impl<const D: usize> ChartDomain<D> {
    /// Domain star-shaped about `center`, contained in the ball of radius
    /// `reach` around it. The bounding box is that ball's cube scaled by 1.5.
    pub fn new(rho: Arc<dyn DefiningFunction<D>>, center: Point<D>, reach: f64) -> Result<Self> {
        if !(D == 2 || D == 3) {
            return Err(MpError::InvalidParameter(format!("dimension {D} is not 2 or 3")));
        }
        if !(reach > 0.0) || rho.value(&center) <= 0.0 {
            return Err(MpError::InvalidParameter(
                "domain center must be interior and reach positive".into(),
            ));
        }
        let half = Point::<D>::repeat(1.5 * reach);
        Ok(Self { rho, center, reach, bbox_min: center - half, bbox_max: center + half })
    }

    /// `rho = R^2 - |x|^2`.
    pub fn ball(radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(MpError::InvalidParameter(format!("radius {radius} must be positive")));
        }
        Self::new(Arc::new(Ball { radius }), Point::<D>::zeros(), radius)
    }

    pub fn dented_ball(radius: f64, depth: f64, width: f64) -> Result<Self> {
        if !(radius > 0.0 && depth >= 0.0 && width > 0.0) || depth >= radius * radius {
            return Err(MpError::InvalidParameter("invalid dent parameters".into()));
        }
        Self::new(Arc::new(DentedBall { radius, depth, width }), Point::<D>::zeros(), radius)
    }

    pub fn rho(&self, x: &Point<D>) -> f64 {
        self.rho.value(x)
    }

    pub fn rho_gradient(&self, x: &Point<D>) -> Point<D> {
        self.rho.gradient(x)
    }

    pub fn rho_hessian(&self, x: &Point<D>) -> Mat<D> {
        self.rho.hessian(x)
    }

    pub fn defining_function(&self) -> &Arc<dyn DefiningFunction<D>> {
        &self.rho
    }

    pub fn contains(&self, x: &Point<D>) -> bool {
        self.rho(x) >= -BOUNDARY_TOLERANCE
    }

    pub fn on_boundary(&self, x: &Point<D>) -> bool {
        self.rho(x).abs() < BOUNDARY_TOLERANCE
    }

    pub fn in_bbox(&self, x: &Point<D>) -> bool {
        (0..D).all(|i| x[i] >= self.bbox_min[i] && x[i] <= self.bbox_max[i])
    }

    pub fn bbox(&self) -> (Point<D>, Point<D>) {
        (self.bbox_min, self.bbox_max)
    }

    pub fn center(&self) -> Point<D> {
        self.center
    }

    /// Upper bound on the Euclidean diameter of `M`.
    pub fn diameter(&self) -> f64 {
        2.0 * self.reach
    }

    /// Unit direction for boundary parameters: an angle in 2D, polar and
    /// azimuthal angles in 3D.
    pub fn direction(params: &[f64]) -> Point<D> {
        let mut e = Point::<D>::zeros();
        if D == 2 {
            e[0] = params[0].cos();
            e[1] = params[0].sin();
        } else {
            let (theta, phi) = (params[0], params[1]);
            e[0] = theta.sin() * phi.cos();
            e[1] = theta.sin() * phi.sin();
            e[2] = theta.cos();
        }
        e
    }

    /// Number of boundary parameters (`D - 1`).
    pub const fn param_count() -> usize {
        D - 1
    }

    /// The boundary point hit by the ray from the center in direction
    /// `direction(params)`, located by bracketing and bisection.
    pub fn boundary_point(&self, params: &[f64]) -> Point<D> {
        let e = Self::direction(params);
        let along = |r: f64| self.rho(&(self.center + e * r));
        let samples = 256;
        let mut lo = 0.0;
        let mut hi = self.reach * 1.5;
        for i in 1..=samples {
            let r = hi * i as f64 / samples as f64;
            if along(r) <= 0.0 {
                hi = r;
                break;
            }
            lo = r;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if along(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // pick whichever bracket end is closer to the zero set
        let r = if along(lo).abs() <= along(hi).abs() { lo } else { hi };
        self.center + e * r
    }

    /// Inverse of [`Self::boundary_point`]: the direction angles of `x` seen
    /// from the center. Angles are in `[0, 2pi)` (2D) or `[0, pi] x [0, 2pi)` (3D).
    pub fn boundary_params(&self, x: &Point<D>) -> Vec<f64> {
        let d = x - self.center;
        let wrap = |a: f64| if a < 0.0 { a + 2.0 * PI } else { a };
        if D == 2 {
            vec![wrap(d[1].atan2(d[0]))]
        } else {
            let r = d.norm();
            vec![(d[2] / r).clamp(-1.0, 1.0).acos(), wrap(d[1].atan2(d[0]))]
        }
    }

    /// Parameters of an `n`-point boundary grid: equispaced angles in 2D, a
    /// Fibonacci lattice in 3D.
    pub fn boundary_grid_params(n: usize) -> Vec<Vec<f64>> {
        if D == 2 {
            (0..n).map(|i| vec![2.0 * PI * i as f64 / n as f64]).collect()
        } else {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                    vec![z.acos(), (golden * i as f64).rem_euclid(2.0 * PI)]
                })
                .collect()
        }
    }

    pub fn boundary_grid(&self, n: usize) -> Vec<Point<D>> {
        Self::boundary_grid_params(n).iter().map(|p| self.boundary_point(p)).collect()
    }

    /// Deterministic quasi-random interior points (Halton sequence in the
    /// bounding box, filtered to `rho > margin`).
    pub fn interior_samples(&self, n: usize, margin: f64) -> Vec<Point<D>> {
        const BASES: [u64; 3] = [2, 3, 5];
        let radical_inverse = |mut i: u64, base: u64| {
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        };
        let lo = self.center - Point::<D>::repeat(self.reach);
        let mut out = Vec::with_capacity(n);
        let mut index = 1u64;
        while out.len() < n && index < 1_000_000 {
            let x = Point::<D>::from_fn(|i, _| {
                lo[i] + 2.0 * self.reach * radical_inverse(index, BASES[i])
            });
            if self.rho(&x) > margin {
                out.push(x);
            }
            index += 1;
        }
        out
    }

    /// Checks `|d rho| > 1e-8` at `n` boundary grid points.
    pub fn check_regular_boundary(&self, n: usize) -> Result<()> {
        for x in self.boundary_grid(n) {
            if self.rho_gradient(&x).norm() <= 1e-8 {
                return Err(MpError::DegenerateBoundary { point: x.as_slice().to_vec() });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector2, Vector3};

    #[test]
    fn disk_boundary_points_are_on_the_circle() {
        let dom = ChartDomain::<2>::ball(2.0).unwrap();
        for x in dom.boundary_grid(17) {
            assert!((x.norm() - 2.0).abs() < 1e-12);
            assert!(dom.on_boundary(&x));
        }
        let p = dom.boundary_point(&[0.3]);
        assert!((dom.boundary_params(&p)[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ball_3d_parameters_roundtrip() {
        let dom = ChartDomain::<3>::ball(1.0).unwrap();
        let p = dom.boundary_point(&[1.1, 4.0]);
        let q = dom.boundary_params(&p);
        assert!((q[0] - 1.1).abs() < 1e-12 && (q[1] - 4.0).abs() < 1e-12);
        assert_eq!(dom.boundary_grid(40).len(), 40);
        assert!(dom.on_boundary(&Vector3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn dent_moves_boundary_inward() {
        let dom = ChartDomain::<2>::dented_ball(1.0, 0.3, 0.3).unwrap();
        let p = dom.boundary_point(&[0.0]);
        assert!(p[0] < 0.9);
        assert!(dom.rho(&p).abs() < 1e-12);
        let far = dom.boundary_point(&[PI]);
        assert!((far[0] + 1.0).abs() < 1e-9);
        let x = Vector2::new(0.8, 0.1);
        let h = dom.rho_hessian(&x);
        let fd = fd::hessian(|y| dom.rho(y), &x, 1e-3);
        assert!((h - fd).norm() < 1e-6);
        let g = dom.rho_gradient(&x);
        let gfd = fd::gradient(|y| dom.rho(y), &x, 1e-5);
        assert!((g - gfd).norm() < 1e-9);
    }

    #[test]
    fn interior_samples_are_inside() {
        let dom = ChartDomain::<2>::ball(1.0).unwrap();
        let pts = dom.interior_samples(100, 0.0);
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| p.norm() < 1.0));
        dom.check_regular_boundary(50).unwrap();
    }
}
