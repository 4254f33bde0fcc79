use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain description: {0}")]
    InvalidSpec(String),
    #[error("grid spacing {h} leaves no interior node")]
    SpacingTooCoarse { h: f64 },
    #[error("disk-kernel backend requires the unit disk")]
    BackendMismatch,
    #[error("linear solve failed: relative residual {residual:e}")]
    SolveFailure { residual: f64 },
    #[error("boundary flux violates compatibility: closed integral {integral:e} exceeds {tolerance:e}")]
    CompatibilityViolation { integral: f64, tolerance: f64 },
    #[error("field length {got} does not match domain node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("kappa must be positive, got {0}")]
    InvalidKappa(f64),
    #[error("vorticity leaves the box [0, {upper}] by {violation:e}")]
    BoxViolation { upper: f64, violation: f64 },
    #[error("circulation {kappa} exceeds the admissible maximum {capacity}")]
    Infeasible { kappa: f64, capacity: f64 },
    #[error("multiplier bracket failed to enclose the target mass")]
    NoRoot,
    #[error("site {site}: circulation {kappa} exceeds ball capacity {capacity}")]
    SiteInfeasible { site: usize, kappa: f64, capacity: f64 },
    #[error("invalid vortex sites: {0}")]
    InvalidSites(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("oracle is limited to 100 nodes, got {0}")]
    GridTooLarge(usize),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid strength schedule: {0}")]
    InvalidSchedule(String),
    #[error("field file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
