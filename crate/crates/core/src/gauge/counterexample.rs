//! Two systems at `k = 3` with a common reduction that are k-gauge
//! equivalent through `μ` alone, although no diffeomorphism relates their
//! potentials.

use std::sync::Arc;

use crate::catalog::DiskModel;
use crate::error::{MpError, Result};
use crate::geometry::{ChartDomain, DerivativeMode, FieldModel, Mat, Point, ScalarField, ScenarioFields};
use crate::systems::MpSystem;

use super::{GaugeTransform, Identity};

pub const COUNTEREXAMPLE_K: f64 = 3.0;

/// `φ = 3/2 - c1 s` and `ψ = 3/4 + c2 s` with `s = 1 - |x|²/R²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterexampleParams {
    pub c1: f64,
    pub c2: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        Self { c1: 0.25, c2: 0.125 }
    }
}

impl CounterexampleParams {
    /// `1 ≤ φ < 3/2` and `3/4 < ψ ≤ 1` on the interior.
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 <= 0.5) {
            return Err(MpError::InvalidParameter(format!("c1 = {} must lie in (0, 1/2]", self.c1)));
        }
        if !(self.c2 > 0.0 && self.c2 <= 0.25) {
            return Err(MpError::InvalidParameter(format!("c2 = {} must lie in (0, 1/4]", self.c2)));
        }
        Ok(())
    }
}

/// `(φ(x), ψ(x))` on the ball of radius `radius`.
pub fn counterexample_potentials<const D: usize>(
    params: &CounterexampleParams,
    radius: f64,
    x: &Point<D>,
) -> (f64, f64) {
    let s = 1.0 - x.norm_squared() / (radius * radius);
    (1.5 - params.c1 * s, 0.75 + params.c2 * s)
}

/// Which of the two potentials, `φ` or `2ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Phi,
    TwoPsi,
}

/// `(g / (2(3 - p)), α, p)` for `p = φ` or `p = 2ψ`.
#[derive(Clone)]
struct CounterexampleModel {
    base: Arc<DiskModel>,
    params: CounterexampleParams,
    radius: f64,
    branch: Branch,
}

impl CounterexampleModel {
    fn p<const D: usize>(&self, x: &Point<D>) -> (f64, Point<D>) {
        let r2 = self.radius * self.radius;
        let s = 1.0 - x.norm_squared() / r2;
        let ds = x * (-2.0 / r2);
        match self.branch {
            Branch::Phi => (1.5 - self.params.c1 * s, ds * -self.params.c1),
            Branch::TwoPsi => (1.5 + 2.0 * self.params.c2 * s, ds * (2.0 * self.params.c2)),
        }
    }
}

impl<const D: usize> FieldModel<D> for CounterexampleModel {
    fn metric(&self, x: &Point<D>) -> Mat<D> {
        let (p, _) = self.p(x);
        FieldModel::<D>::metric(self.base.as_ref(), x) / (2.0 * (COUNTEREXAMPLE_K - p))
    }

    fn one_form(&self, x: &Point<D>) -> Point<D> {
        self.base.one_form(x)
    }

    fn potential(&self, x: &Point<D>) -> f64 {
        self.p(x).0
    }

    fn metric_partials(&self, x: &Point<D>) -> Option<[Mat<D>; D]> {
        let (p, dp) = self.p(x);
        let g = FieldModel::<D>::metric(self.base.as_ref(), x);
        let dg = FieldModel::<D>::metric_partials(self.base.as_ref(), x)?;
        let gap = COUNTEREXAMPLE_K - p;
        Some(std::array::from_fn(|k| dg[k] / (2.0 * gap) + g * (dp[k] / (2.0 * gap * gap))))
    }

    fn one_form_partials(&self, x: &Point<D>) -> Option<Mat<D>> {
        FieldModel::<D>::one_form_partials(self.base.as_ref(), x)
    }

    fn potential_gradient(&self, x: &Point<D>) -> Option<Point<D>> {
        Some(self.p(x).1)
    }
}

/// `μ = (3 - 2ψ) / (3 - φ)`.
#[derive(Clone, Copy)]
struct CounterexampleFactor {
    params: CounterexampleParams,
    radius: f64,
}

impl<const D: usize> ScalarField<D> for CounterexampleFactor {
    fn value(&self, x: &Point<D>) -> f64 {
        let (phi, psi) = counterexample_potentials(&self.params, self.radius, x);
        (COUNTEREXAMPLE_K - 2.0 * psi) / (COUNTEREXAMPLE_K - phi)
    }

    fn gradient(&self, x: &Point<D>) -> Point<D> {
        let (phi, psi) = counterexample_potentials(&self.params, self.radius, x);
        let ds = x * (-2.0 / (self.radius * self.radius));
        let num = COUNTEREXAMPLE_K - 2.0 * psi;
        let den = COUNTEREXAMPLE_K - phi;
        // d(num) = -2 c2 ds, d(den) = c1 ds
        (ds * (-2.0 * self.params.c2) * den - ds * self.params.c1 * num) / (den * den)
    }
}

/// Builds the pair `(g/(2(3-φ)), α, φ)` and `(g/(2(3-2ψ)), α, 2ψ)` at `k = 3`
/// on the ball `domain`, and the gauge `(id, 0, (3-2ψ)/(3-φ))` between them.
pub fn counterexample_pair<const D: usize>(
    base: Arc<DiskModel>,
    domain: ChartDomain<D>,
    params: CounterexampleParams,
    mode: DerivativeMode,
) -> Result<(MpSystem<D>, MpSystem<D>, GaugeTransform<D>)> {
    params.validate()?;
    let radius = 0.5 * domain.diameter();
    let build = |branch| {
        let model = CounterexampleModel { base: base.clone(), params, radius, branch };
        let fields = ScenarioFields::new(Arc::new(model)).with_mode(mode);
        MpSystem::new(domain.clone(), fields, COUNTEREXAMPLE_K)
    };
    let first = build(Branch::Phi)?;
    let second = build(Branch::TwoPsi)?;
    let gauge = GaugeTransform::new(
        Arc::new(Identity),
        Arc::new(crate::geometry::Constant(0.0)),
        Arc::new(CounterexampleFactor { params, radius }),
        COUNTEREXAMPLE_K,
        &domain,
    )?;
    Ok((first, second, gauge))
}
