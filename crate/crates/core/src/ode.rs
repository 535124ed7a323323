//! Dormand–Prince 5(4) integrator with PI step-size control and the
//! standard fourth-order continuous extension.

use nalgebra::SMatrix;

use crate::error::{MpError, Result};

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrator state: any fixed-size `f64` matrix.
pub type State<const R: usize, const C: usize> = SMatrix<f64, R, C>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 1_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(MpError::Config(format!(
                "integrator tolerances must be positive (rtol = {}, atol = {})",
                self.rtol, self.atol
            )));
        }
        Ok(())
    }
}

/// One accepted step with its interpolant on `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const R: usize, const C: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [State<R, C>; 5],
}

impl<const R: usize, const C: usize> DenseStep<R, C> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn y0(&self) -> State<R, C> {
        self.rcont[0]
    }

    pub fn y1(&self) -> State<R, C> {
        self.rcont[0] + self.rcont[1]
    }

    /// Interpolated state at `t` (intended for `t` inside the step).
    pub fn eval(&self, t: f64) -> State<R, C> {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        r1 + (r2 + (r3 + (r4 + r5 * s1) * s) * s1) * s
    }

    /// Time derivative of the interpolant at `t`.
    pub fn eval_derivative(&self, t: f64) -> State<R, C> {
        let s = (t - self.t0) / self.h;
        let [_, r2, r3, r4, r5] = &self.rcont;
        // d/ds of r2 s + r3 s(1-s) + r4 s²(1-s) + r5 s²(1-s)²
        let ds = r2 + r3 * (1.0 - 2.0 * s) + r4 * (s * (2.0 - 3.0 * s))
            + r5 * (2.0 * s * (1.0 - s) * (1.0 - 2.0 * s));
        ds / self.h
    }
}

/// Result of an attempted step.
pub struct Attempt<const R: usize, const C: usize> {
    pub dense: DenseStep<R, C>,
    pub y1: State<R, C>,
    pub f1: State<R, C>,
    /// Scaled RMS error estimate; the step is acceptable when `<= 1`.
    pub error: f64,
}

fn scaled_rms<const R: usize, const C: usize>(
    e: &State<R, C>,
    y0: &State<R, C>,
    y1: &State<R, C>,
    opts: &OdeOptions,
) -> f64 {
    let mut sum = 0.0;
    for i in 0..R * C {
        let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
        sum += (e[i] / sc).powi(2);
    }
    (sum / (R * C) as f64).sqrt()
}

/// A single Dormand–Prince step of size `h` from `(t, y)` with `f0 = f(t, y)`.
pub fn dopri_step<const R: usize, const C: usize, F>(
    f: &mut F,
    t: f64,
    y: &State<R, C>,
    f0: &State<R, C>,
    h: f64,
    opts: &OdeOptions,
) -> Result<Attempt<R, C>>
where
    F: FnMut(f64, &State<R, C>) -> Result<State<R, C>>,
{
    let k1 = *f0;
    let k2 = f(t + C2 * h, &(y + k1 * (A21 * h)))?;
    let k3 = f(t + C3 * h, &(y + (k1 * A31 + k2 * A32) * h))?;
    let k4 = f(t + C4 * h, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * h))?;
    let k5 = f(t + C5 * h, &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * h))?;
    let k6 = f(t + h, &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * h))?;
    let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * h;
    let k7 = f(t + h, &y1)?;
    let err = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * h;
    let ydiff = y1 - y;
    let bspl = k1 * h - ydiff;
    let rcont = [
        *y,
        ydiff,
        bspl,
        ydiff - k7 * h - bspl,
        (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * h,
    ];
    Ok(Attempt {
        dense: DenseStep { t0: t, h, rcont },
        y1,
        f1: k7,
        error: scaled_rms(&err, y, &y1, opts),
    })
}

/// Dense solution on `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct Solution<const R: usize, const C: usize> {
    pub steps: Vec<DenseStep<R, C>>,
    pub rejected: usize,
    /// True when the stop predicate ended the integration early.
    pub stopped: bool,
}

impl<const R: usize, const C: usize> Solution<R, C> {
    pub fn t_start(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.t0)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t1())
    }

    pub fn final_state(&self) -> State<R, C> {
        self.steps.last().expect("empty solution").y1()
    }

    /// Index of the step containing `t` (clamped to the solution span).
    pub fn step_index(&self, t: f64) -> usize {
        let idx = self.steps.partition_point(|s| s.t1() < t);
        idx.min(self.steps.len() - 1)
    }

    pub fn eval(&self, t: f64) -> State<R, C> {
        self.steps[self.step_index(t)].eval(t)
    }

    pub fn eval_derivative(&self, t: f64) -> State<R, C> {
        self.steps[self.step_index(t)].eval_derivative(t)
    }
}

fn initial_step<const R: usize, const C: usize, F>(
    f: &mut F,
    t: f64,
    y: &State<R, C>,
    f0: &State<R, C>,
    opts: &OdeOptions,
) -> Result<f64>
where
    F: FnMut(f64, &State<R, C>) -> Result<State<R, C>>,
{
    let norm = |v: &State<R, C>| scaled_rms(v, y, y, opts);
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let f1 = f(t + h0, &(y + f0 * h0))?;
    let d2 = norm(&(f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`.
///
/// After each accepted step `stop(t, y)` is consulted; returning `true` ends
/// the integration with `Solution::stopped` set.
pub fn integrate<const R: usize, const C: usize, F, S>(
    mut f: F,
    t0: f64,
    y0: State<R, C>,
    t_end: f64,
    opts: &OdeOptions,
    mut stop: S,
) -> Result<Solution<R, C>>
where
    F: FnMut(f64, &State<R, C>) -> Result<State<R, C>>,
    S: FnMut(f64, &State<R, C>) -> Result<bool>,
{
    opts.validate()?;
    if !(t_end > t0) {
        return Err(MpError::InvalidParameter(format!("empty integration span [{t0}, {t_end}]")));
    }
    const SAFETY: f64 = 0.9;
    const BETA: f64 = 0.04;
    let expo = 0.2 - 0.75 * BETA;

    let mut t = t0;
    let mut y = y0;
    let mut fy = f(t, &y)?;
    let mut h = match opts.h_init {
        Some(h) => h,
        None => initial_step(&mut f, t, &y, &fy, opts)?,
    }
    .min(opts.h_max)
    .min(t_end - t0);
    let mut err_old: f64 = 1e-4;
    let mut steps = Vec::new();
    let mut rejected = 0;

    for _ in 0..opts.max_steps {
        if t_end - t <= 1e-14 * t_end.abs().max(1.0) {
            break;
        }
        let last = t + h >= t_end;
        let h_try = if last { t_end - t } else { h };
        if h_try.abs() < opts.h_min {
            return Err(MpError::StepSizeUnderflow { t, h: h_try });
        }
        let attempt = dopri_step(&mut f, t, &y, &fy, h_try, opts)?;
        let err = attempt.error;
        if !err.is_finite() {
            h = h_try * 0.2;
            rejected += 1;
            continue;
        }
        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let fac = (fac11 / err_old.powf(BETA) / SAFETY).clamp(0.2, 10.0);
            err_old = err.max(1e-4);
            t = if last { t_end } else { t + h_try };
            y = attempt.y1;
            fy = attempt.f1;
            steps.push(attempt.dense);
            h = (h_try / fac).min(opts.h_max);
            if stop(t, &y)? {
                return Ok(Solution { steps, rejected, stopped: true });
            }
            if last {
                return Ok(Solution { steps, rejected, stopped: false });
            }
        } else {
            rejected += 1;
            h = h_try / (fac11 / SAFETY).min(5.0);
        }
    }
    if t_end - t <= 1e-14 * t_end.abs().max(1.0) && !steps.is_empty() {
        return Ok(Solution { steps, rejected, stopped: false });
    }
    Err(MpError::StepSizeUnderflow { t, h })
}
