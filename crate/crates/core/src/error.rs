use thiserror::Error;

pub type Result<T, E = MpError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MpError {
    #[error("metric is not positive definite at {point:?} (min eigenvalue {min_eigenvalue:e})")]
    DegenerateMetric { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("defining function has vanishing gradient at boundary point {point:?}")]
    DegenerateBoundary { point: Vec<f64> },

    #[error("below potential: energy level k = {k} does not exceed U = {potential} at {point:?}")]
    BelowPotential { k: f64, potential: f64, point: Vec<f64> },

    #[error("state representation {found} does not match formulation {expected}")]
    RepresentationMismatch { expected: &'static str, found: &'static str },

    #[error("step size underflow at t = {t:e} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("trajectory left the bounding box at t = {t}")]
    LeftBoundingBox { t: f64 },

    #[error("no boundary crossing before t_max = {t_max} (possible trapped orbit)")]
    NoExit { t_max: f64 },

    #[error("shooting did not converge after {iterations} iterations (residual {residual:e})")]
    ShootingFailure { iterations: usize, residual: f64 },

    #[error("gauge energy level {gauge_k} differs from system energy level {system_k}")]
    EnergyLevelMismatch { gauge_k: f64, system_k: f64 },

    #[error("systems are not k-gauge related: {relation} residual {residual:e} exceeds {tolerance:e}")]
    NotEquivalent { relation: &'static str, residual: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),
}
