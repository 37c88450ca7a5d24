use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole (a = {a}, b = {b}) outside admissible region a > 0, |b| < omega = {omega}")]
    PoleOutOfRegion { a: f64, b: f64, omega: f64 },

    #[error("numerator degree {numerator} must be below denominator degree {denominator}")]
    DegreeViolation { numerator: usize, denominator: usize },

    #[error("complex pole (a = {a}, b = {b}) has no conjugate mate of equal multiplicity")]
    NonConjugateSymmetric { a: f64, b: f64 },

    #[error("poles {first} and {second} coincide within 1e-12; merge them into one multiplicity")]
    NumericalDegeneracy { first: usize, second: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("quadrature did not converge: estimate {estimate}, error {error_estimate}")]
    QuadratureNotConverged { estimate: f64, error_estimate: f64 },

    #[error("exponent saturated: log|value| = {log_magnitude}, arg = {phase}")]
    Saturated { log_magnitude: f64, phase: f64 },

    #[error("predictor spectrum saturated at omega = {omega}")]
    SaturatedSpectrum { omega: f64 },

    #[error("spectrum not decayed at grid edge: residual {residual:e} exceeds {threshold:e}")]
    SpectrumNotDecayed { residual: f64, threshold: f64 },

    #[error("truncation at omega_max = {omega_max} not justified: |K| = {magnitude:e}")]
    TruncationNotJustified { omega_max: f64, magnitude: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("insufficient history: horizon {horizon} exceeds available span {available}")]
    InsufficientHistory { horizon: f64, available: f64 },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("class constraint violated: {0}")]
    ClassConstraintViolation(String),

    #[error("class mismatch: {0}")]
    ClassMismatch(String),

    #[error("error not monotone for signal {signal}: gamma {gamma_prev} -> {gamma_next}, err {err_prev:e} -> {err_next:e}")]
    MonotonicityViolation {
        signal: String,
        gamma_prev: f64,
        gamma_next: f64,
        err_prev: f64,
        err_next: f64,
    },

    #[error("bound violated for signal {signal} at gamma {gamma}: measured {measured:e} > bound {bound:e}")]
    BoundViolation {
        gamma: f64,
        signal: String,
        measured: f64,
        bound: f64,
    },

    #[error("no error growth detected along the gamma ladder")]
    NoGrowthDetected,

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Variant name, used in machine-readable failure records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PoleOutOfRegion { .. } => "PoleOutOfRegion",
            Error::DegreeViolation { .. } => "DegreeViolation",
            Error::NonConjugateSymmetric { .. } => "NonConjugateSymmetric",
            Error::NumericalDegeneracy { .. } => "NumericalDegeneracy",
            Error::InvalidInput(_) => "InvalidInput",
            Error::DomainError(_) => "DomainError",
            Error::QuadratureNotConverged { .. } => "QuadratureNotConverged",
            Error::Saturated { .. } => "Saturated",
            Error::SaturatedSpectrum { .. } => "SaturatedSpectrum",
            Error::SpectrumNotDecayed { .. } => "SpectrumNotDecayed",
            Error::TruncationNotJustified { .. } => "TruncationNotJustified",
            Error::GridMismatch(_) => "GridMismatch",
            Error::InsufficientHistory { .. } => "InsufficientHistory",
            Error::SupportViolation(_) => "SupportViolation",
            Error::ClassConstraintViolation(_) => "ClassConstraintViolation",
            Error::ClassMismatch(_) => "ClassMismatch",
            Error::MonotonicityViolation { .. } => "MonotonicityViolation",
            Error::BoundViolation { .. } => "BoundViolation",
            Error::NoGrowthDetected => "NoGrowthDetected",
            Error::Io(_) => "Io",
            Error::Parse(_) => "Parse",
        }
    }

    /// One-line JSON failure record carrying the variant's fields.
    pub fn record(&self) -> serde_json::Value {
        use serde_json::json;
        let fields = match self {
            Error::MonotonicityViolation { signal, gamma_prev, gamma_next, err_prev, err_next } => json!({
                "signal": signal, "gamma_prev": gamma_prev, "gamma_next": gamma_next,
                "err_prev": err_prev, "err_next": err_next,
            }),
            Error::BoundViolation { gamma, signal, measured, bound } => json!({
                "gamma": gamma, "signal": signal, "measured": measured, "bound": bound,
            }),
            _ => json!({}),
        };
        json!({ "error": self.kind(), "message": self.to_string(), "fields": fields })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
