use thiserror::Error;

/// Failure modes of the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("evaluation point within {distance:e} of pole {pole}")]
    PoleHit { pole: String, distance: f64 },
    #[error("pole order {order} exceeds cap {cap}")]
    OrderOverflow { order: u32, cap: u32 },
    #[error("function has no decaying rational antiderivative: {0}")]
    NotIntegrableToRational(String),
    #[error("pole {0} lies on the real axis")]
    PoleOnAxis(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grids differ")]
    GridMismatch,
    #[error("zero mode {magnitude:e} too large for a periodic antiderivative")]
    ZeroModeError { magnitude: f64 },
    #[error("field is not lower-analytic (positive-mode ratio {ratio:e})")]
    NotLowerAnalytic { ratio: f64 },
    #[error("analytic continuation unreliable at height {height}: noise estimate {estimate:e}")]
    ContinuationUnreliable { height: f64, estimate: f64 },
    #[error("analyticity lost in right-hand side (positive-mode ratio {ratio:e})")]
    AnalyticityLoss { ratio: f64 },
    #[error("step rejected at t = {t}: {reason}")]
    StepRejected { t: f64, reason: String },
    #[error("blow-up at t = {t}: max |field| = {max:e}")]
    Blowup { t: f64, max: f64 },
    #[error("time step {dt} exceeds CFL cap {cap}")]
    CflViolation { dt: f64, cap: f64 },
    #[error("mean of 1/R - 1 is {mean:e}; surface would drift secularly")]
    SecularDrift { mean: f64 },
    #[error("time t equals singular time t0 = {0}")]
    SingularTime(f64),
    #[error("square-root argument crosses the branch cut at chi = {0}")]
    BranchAmbiguity(String),
    #[error("Re R_c changed sign at t = {0}; frame time is not monotone")]
    NonMonotone(f64),
    #[error("Newton iteration did not converge (last |R| = {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("iterate left the validated continuation region at {0}")]
    LeftValidityRegion(String),
    #[error("zero track lost at t = {last_good_time}: {reason}")]
    TrackLost { last_good_time: f64, reason: String },
    #[error("contour passes within {min_abs:e} of a zero of R")]
    ContourThroughZero { min_abs: f64 },
    #[error("|dz/du| below {0:e} on the grid")]
    DivisionByZeroOnGrid(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
