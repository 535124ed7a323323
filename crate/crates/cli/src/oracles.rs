//! Closed-form boundary data of flat disks with a constant magnetic field.

use std::f64::consts::TAU;

use mpflow_core::Point;

/// Exit data of the ray entering the disk `|x| < radius` at `p` with
/// velocity `v` under `v' = B J v` (flat metric, `U` constant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarExit {
    pub point: Point<2>,
    pub velocity: Point<2>,
    pub tau: f64,
    /// `∫ α(ẋ) dt` for `α = (B/2)(-x₂ dx₁ + x₁ dx₂)`.
    pub flux: f64,
}

fn rotate(v: &Point<2>, angle: f64) -> Point<2> {
    let (s, c) = angle.sin_cos();
    Point::<2>::new(c * v[0] - s * v[1], s * v[0] + c * v[1])
}

fn perp(v: &Point<2>) -> Point<2> {
    Point::<2>::new(-v[1], v[0])
}

pub fn planar_exit(radius: f64, b: f64, p: &Point<2>, v: &Point<2>) -> PlanarExit {
    if b == 0.0 {
        let tau = -2.0 * p.dot(v) / v.norm_squared();
        return PlanarExit { point: p + v * tau, velocity: *v, tau, flux: 0.0 };
    }
    let center = p + perp(v) / b;
    let r = v.norm() / b.abs();
    let rel = p - center;
    let phi0 = rel[1].atan2(rel[0]);
    // |c + r e(φ)| = R  <=>  c·e(φ) = (R² - |c|² - r²) / (2r)
    let rhs = (radius * radius - center.norm_squared() - r * r) / (2.0 * r);
    let psi = center[1].atan2(center[0]);
    let w = (rhs / center.norm()).clamp(-1.0, 1.0).acos();
    let sweep = [psi + w, psi - w]
        .iter()
        .map(|root| (b.signum() * (root - phi0)).rem_euclid(TAU))
        .map(|d| if !(1e-9..=TAU - 1e-9).contains(&d) { TAU } else { d })
        .fold(f64::INFINITY, f64::min);
    let tau = sweep / b.abs();
    let turn = b * tau;
    let rel_exit = rotate(&rel, turn);
    let phi1 = phi0 + turn;
    let moment = center[0] * (phi1.sin() - phi0.sin()) + center[1] * (phi0.cos() - phi1.cos());
    let flux = 0.5 * b * b * r * r * tau + 0.5 * b * r * moment;
    PlanarExit { point: center + rel_exit, velocity: perp(&rel_exit) * b, tau, flux }
}

impl PlanarExit {
    /// Time-free action at energy `k` with `U = 0`.
    pub fn action(&self, k: f64) -> f64 {
        2.0 * k * self.tau - self.flux
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameter_chord() {
        let e = planar_exit(1.0, 0.0, &Point::<2>::new(-1.0, 0.0), &Point::<2>::new(2.0, 0.0));
        assert!((e.point - Point::<2>::new(1.0, 0.0)).norm() < 1e-15);
        assert!((e.tau - 1.0).abs() < 1e-15);
        assert!((e.action(2.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_turn() {
        // unit speed, B = 1: the orbit is the unit circle centred at (-1, 1)
        let e = planar_exit(1.0, 1.0, &Point::<2>::new(-1.0, 0.0), &Point::<2>::new(1.0, 0.0));
        assert!((e.point - Point::<2>::new(0.0, 1.0)).norm() < 1e-12);
        assert!((e.tau - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((e.velocity - Point::<2>::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn reversed_field_mirrors_the_arc() {
        let p = Point::<2>::new(-1.0, 0.0);
        let v = Point::<2>::new(0.8, 0.3);
        let up = planar_exit(1.0, 0.7, &p, &v);
        let down = planar_exit(1.0, -0.7, &p, &Point::<2>::new(v[0], -v[1]));
        assert!((up.point[0] - down.point[0]).abs() < 1e-12);
        assert!((up.point[1] + down.point[1]).abs() < 1e-12);
        assert!((up.tau - down.tau).abs() < 1e-12);
        assert!((up.flux - down.flux).abs() < 1e-12);
    }
}
