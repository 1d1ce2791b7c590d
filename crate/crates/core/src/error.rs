use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoinError {
    #[error("{what} not normalized: squared sum {sum} differs from 1")]
    NotNormalized { what: &'static str, sum: f64 },
    #[error("matrix is not unitary: ‖C*C − I‖ = {defect:e}")]
    NotUnitary { defect: f64 },
    #[error("coin at x = {x} is not unitary: ‖C*C − I‖ = {defect:e}")]
    SiteNotUnitary { x: i64, defect: f64 },
    #[error("decay constants must be positive (kappa = {kappa}, epsilon = {epsilon})")]
    InvalidDecay { kappa: f64, epsilon: f64 },
    #[error("short-range bound violated at x = {x}: ‖C(x) − C₀‖ = {deviation:e} > {bound:e}")]
    DecayViolation { x: i64, deviation: f64, bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolutionError {
    #[error(
        "wavefront reached the window edge: support [{lo}, {hi}] within window [{x_min}, {x_max}]"
    )]
    BoundaryTouch {
        x_min: i64,
        x_max: i64,
        lo: i64,
        hi: i64,
    },
    #[error("state window [{state_min}, +{state_len}) does not match transfer window [{transfer_min}, +{transfer_len})")]
    WindowMismatch {
        state_min: i64,
        state_len: usize,
        transfer_min: i64,
        transfer_len: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("limit-law mode requires {0}")]
    NotLimitLawForm(&'static str),
    #[error("band-degenerate momentum k = {k}: 1 − τ² = {gap:e}, group velocity undefined")]
    Degenerate { k: f64, gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatterError {
    #[error(
        "wave operator did not converge: residual {residual:e} > tol {tol:e} after T = {t_used}"
    )]
    NonConvergence {
        t_used: usize,
        residual: f64,
        tol: f64,
    },
    #[error(
        "bound-state mass is window sensitive: w0 = {w0_small} at N = {sites} vs {w0_large} at N = {}",
        2 * sites
    )]
    WindowSensitive {
        sites: usize,
        w0_small: f64,
        w0_large: f64,
    },
    #[error("initial state support [{lo}, {hi}] does not fit in the inner half of the {sites}-site diagonalization window")]
    InitialOutsideWindow { lo: i64, hi: i64, sites: usize },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error("empty T schedule")]
    EmptySchedule,
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitLawError {
    #[error("g(v) = {value} lies outside [-1, 1] at v = {v}")]
    OutsideArccosDomain { v: f64, value: f64 },
    #[error("quadrature did not reach target {target:e}: achieved {achieved:e}")]
    Quadrature { target: f64, achieved: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{}config parse error: {message}", line_prefix(*line))]
    Parse { line: Option<usize>, message: String },
    #[error("{}invalid `{key}`: {message}", line_prefix(*line))]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("unknown coin model `{0}`")]
    UnknownModel(String),
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

/// Crate-level error, aggregating the per-module kinds.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Coin(#[from] CoinError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Scatter(#[from] ScatterError),
    #[error(transparent)]
    LimitLaw(#[from] LimitLawError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
