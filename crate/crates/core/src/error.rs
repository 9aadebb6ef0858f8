use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("sphere map input has norm {norm}, not 1")]
    NotUnit { norm: f64 },

    #[error("map expression parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("map is not flagged proper: {0}")]
    NotProper(String),

    #[error("evaluation produced a non-finite value")]
    NonFinite,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no escape radius found for r = {r} within window {window}")]
    EscapeWindowExhausted { r: f64, window: f64 },

    #[error("properness certification failed: {0}")]
    CertificationFailed(String),

    #[error("singular Jacobian at {point:?} (condition number {condition:e})")]
    SingularJacobian { point: Vec<f64>, condition: f64 },

    #[error("no regular value found after {attempts} attempts")]
    NoRegularValue { attempts: usize },

    #[error("fiber tracing step collapsed near {location:?}")]
    StepCollapse { location: Vec<f64> },

    #[error("traced fiber left the box at {location:?} without closing")]
    FiberEscaped { location: Vec<f64> },

    #[error("seed {seed:?} could not be polished onto the fiber")]
    SeedNotOnFiber { seed: Vec<f64> },

    #[error("curves intersect within tolerance")]
    CurvesIntersect,

    #[error("tubes overlap: radius {radius} vs minimum separation {separation}")]
    TubeOverlap { radius: f64, separation: f64 },

    #[error("framed points are not realizable by a proper map: {0}")]
    NotRealizable(String),

    #[error("winding refinement cap exceeded")]
    RefinementCap,

    #[error("end sign not settled at window {window}; increase the window")]
    SignNotSettled { window: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("classification table: {0}")]
    Table(String),
}

impl Error {
    /// Stable snake_case tag for structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotUnit { .. } => "not_unit",
            Error::Parse { .. } => "parse",
            Error::InvalidMap(_) => "invalid_map",
            Error::InvalidInput(_) => "invalid_input",
            Error::NotProper(_) => "not_proper",
            Error::NonFinite => "non_finite",
            Error::Degenerate(_) => "degenerate",
            Error::EscapeWindowExhausted { .. } => "escape_window_exhausted",
            Error::CertificationFailed(_) => "certification_failed",
            Error::SingularJacobian { .. } => "singular_jacobian",
            Error::NoRegularValue { .. } => "no_regular_value",
            Error::StepCollapse { .. } => "step_collapse",
            Error::FiberEscaped { .. } => "fiber_escaped",
            Error::SeedNotOnFiber { .. } => "seed_not_on_fiber",
            Error::CurvesIntersect => "curves_intersect",
            Error::TubeOverlap { .. } => "tube_overlap",
            Error::NotRealizable(_) => "not_realizable",
            Error::RefinementCap => "refinement_cap",
            Error::SignNotSettled { .. } => "sign_not_settled",
            Error::Unsupported(_) => "unsupported",
            Error::Table(_) => "table",
        }
    }
}
