use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain mismatch: expected {expected}, found {found}")]
    DomainMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("non-finite value {value} at {location}")]
    NonFinite { value: String, location: String },

    #[error("point {value} on the {axis} axis is not grid-aligned (step {step}); nearest representable value is {nearest}")]
    OffGrid {
        axis: &'static str,
        value: f64,
        step: f64,
        nearest: f64,
    },

    #[error("lattice parameter {name} = {value} is not a multiple of the grid step {step}; nearest valid value is {nearest}")]
    MisalignedLattice {
        name: &'static str,
        value: f64,
        step: f64,
        nearest: f64,
    },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("lattice point ({k}, {l}) is not in the truncated index set")]
    NotInLattice { k: i64, l: i64 },

    #[error("window has zero norm")]
    ZeroWindow,

    #[error("invalid band: {0}")]
    InvalidBand(String),

    #[error("convolution supports exceed half the period on the {axis} axis (combined half-width {extent}, half-period {half_period})")]
    WrapAround {
        axis: &'static str,
        extent: f64,
        half_period: f64,
    },

    #[error("operator has no sampled symbol (point-scatterer operator); use apply_spreading or a direct inner product instead")]
    NoSampledSymbol,

    #[error("|G| = {min_abs} < {tolerance} at spreading point (eta = {eta}, u = {u}) inside the bump support")]
    NonvanishingViolation {
        min_abs: f64,
        tolerance: f64,
        eta: f64,
        u: f64,
    },

    #[error("reconstruction kernel has not been calibrated")]
    Uncalibrated,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("frame precondition unmet: A_est = {a_est:e}, B_est = {b_est:e}")]
    FrameConditionUnmet { a_est: f64, b_est: f64 },

    #[error("symbol {value} is not in the alphabet at lattice index {index}")]
    AlphabetViolation { index: usize, value: String },

    #[error("pilot value is zero at lattice index {0}")]
    ZeroPilot(usize),

    #[error("system is singular to tolerance (condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
