//! Crate error types, one enum per subsystem, aggregated in [`Error`].

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("horizon {horizon} is not an integer multiple of dt {dt}")]
    HorizonNotAligned { horizon: f64, dt: f64 },
    #[error("need at least one channel")]
    NoChannels,
    #[error("time {0} is not aligned to the path grid")]
    NotGridAligned(f64),
    #[error("time {t} outside the usable window [{lo}, {hi}]")]
    OutOfWindow { t: f64, lo: f64, hi: f64 },
    #[error("shift by {0} exhausts the path window")]
    WindowExhausted(f64),
    #[error("channel {got} out of range, path has {have}")]
    BadChannel { got: usize, have: usize },
    #[error("dump requires an unshifted path")]
    DumpShifted,
    #[error("corrupt path dump: {0}")]
    CorruptDump(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("model '{0}' has no {1} chart")]
    MissingChart(String, &'static str),
    #[error("model '{0}' does not expose the skew-product polar structure")]
    NotSkewProduct(String),
    #[error("model '{0}' is not a diagonal-noise polar model")]
    NotDiagonalPolar(String),
    #[error("need at least two probe samples")]
    TooFewSamples,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("integrator step {dt} does not match path step {path_dt}")]
    StepMismatch { dt: f64, path_dt: f64 },
    #[error("duration {duration} is not an integer multiple of dt {dt}")]
    DurationNotAligned { duration: f64, dt: f64 },
    #[error("state escaped guard radius {guard} at t = {t} (|x| = {norm})")]
    Escaped { t: f64, norm: f64, guard: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
    #[error("tangent vector collapsed at t = {0}")]
    TangentCollapse(f64),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Error)]
pub enum AttractorError {
    #[error("path window [{lo}, {hi}] too short for quadrature over [{need_lo}, 0]")]
    WindowTooShort {
        lo: f64,
        hi: f64,
        need_lo: f64,
    },
    #[error("tail truncation estimate {est:e} exceeds tolerance {tol:e}")]
    TailTooLarge { est: f64, tol: f64 },
    #[error("empty point set")]
    EmptySet,
    #[error("{failed} of {total} seed propagations failed; partial cloud rejected")]
    PartialCloud { failed: usize, total: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Error)]
pub enum CrpsError {
    #[error("model has no Crauel-random-periodic-solution construction")]
    NoCrps,
    #[error("cache window [{lo}, {hi}] does not cover requested time {t}")]
    CacheWindow { lo: f64, hi: f64, t: f64 },
    #[error("period bracket failed: phase integral never reaches 2 pi before t = {0}")]
    BracketFailure(f64),
    #[error("first-hitting search exhausted the path window at t = {0}")]
    HittingExhausted(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Attractor(#[from] AttractorError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Error)]
pub enum IsochronError {
    #[error("asymptotic phase lag did not settle: drift {drift:e} over the last quarter horizon")]
    NonConvergence { drift: f64 },
    #[error("anchor radius {0} outside working annulus")]
    AnchorOutside(f64),
    #[error(transparent)]
    Crps(#[from] CrpsError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Error)]
pub enum MrtError {
    #[error("annulus grid too small: need at least {min_theta}x{min_r}, got {nt}x{nr}")]
    GridTooSmall {
        min_theta: usize,
        min_r: usize,
        nt: usize,
        nr: usize,
    },
    #[error("banded solve failed: {0}")]
    SingularSystem(String),
    #[error("stationary density has mass {0:e} below -1e-12")]
    NegativeMass(f64),
    #[error("mean rightward flux is not positive: {0:e}")]
    NonPositiveFlux(f64),
    #[error("PDE residual {res:e} exceeds tolerance {tol:e}")]
    ResidualBreach { res: f64, tol: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Crps(#[from] CrpsError),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("missing required key '{0}'")]
    MissingKey(String),
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Top-level error for binaries and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Attractor(#[from] AttractorError),
    #[error(transparent)]
    Crps(#[from] CrpsError),
    #[error(transparent)]
    Isochron(#[from] IsochronError),
    #[error(transparent)]
    Mrt(#[from] MrtError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
