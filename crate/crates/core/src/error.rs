use thiserror::Error;

/// Errors raised by the identification toolkit.
///
/// Every variant maps to a stable short code (see [`Error::code`]) used in
/// CLI output and in the per-trial status column of simulation tables.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative weight {value} for label '{label}'")]
    NegativeWeight { label: String, value: f64 },

    #[error("weights sum to {sum}, not 1 (tolerance {tol:e})")]
    SumNotOne { sum: f64, tol: f64 },

    #[error("full support required but weight of '{label}' is {value}")]
    EmptySupport { label: String, value: f64 },

    #[error("duplicate label '{0}'")]
    DuplicateLabel(String),

    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value {0}")]
    NonFinite(f64),

    #[error("a probability table needs at least one row and one column")]
    EmptyTable,

    #[error("unknown label '{0}'")]
    UnknownLabel(String),

    #[error("label sets do not match: {0}")]
    LabelMismatch(String),

    #[error("cannot condition on state '{0}': zero mass")]
    ZeroMassCondition(String),

    #[error("conditioning event has zero mass")]
    ZeroMassEvent,

    #[error("belief of '{0}' is zero")]
    ZeroBelief(String),

    #[error("slope of '{label}' is {value}; slopes must be positive")]
    NonpositiveSlope { label: String, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no state-independent representation: {0}")]
    NoStateIndependentRepresentation(String),

    #[error("not identifiable: {0}")]
    NotIdentifiable(String),

    #[error("elicited conditionals are inconsistent with the announced prior (residual {residual:e} > {tol:e})")]
    Inconsistent { residual: f64, tol: f64 },

    #[error("solution coordinate for '{label}' is {value}, below -{tol:e}")]
    NegativeSolution { label: String, value: f64, tol: f64 },

    #[error("degenerate deltas: delta_1 = delta_2 = {0}")]
    DegenerateDeltas(f64),

    #[error("debiased belief {0} lies outside (0, 1)")]
    OutOfSimplex(f64),

    #[error("degenerate calibration design: {0}")]
    DegenerateDesign(String),

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("every grid point of the parameter box failed")]
    EmptyInterval,
}

impl Error {
    /// Stable identifier for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::SumNotOne { .. } => "SumNotOne",
            Error::EmptySupport { .. } => "EmptySupport",
            Error::DuplicateLabel(_) => "DuplicateLabel",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::EmptyTable => "EmptyTable",
            Error::UnknownLabel(_) => "UnknownLabel",
            Error::LabelMismatch(_) => "LabelMismatch",
            Error::ZeroMassCondition(_) => "ZeroMassCondition",
            Error::ZeroMassEvent => "ZeroMassEvent",
            Error::ZeroBelief(_) => "ZeroBelief",
            Error::NonpositiveSlope { .. } => "NonpositiveSlope",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NoStateIndependentRepresentation(_) => "NoStateIndependentRepresentation",
            Error::NotIdentifiable(_) => "NotIdentifiable",
            Error::Inconsistent { .. } => "Inconsistent",
            Error::NegativeSolution { .. } => "NegativeSolution",
            Error::DegenerateDeltas(_) => "DegenerateDeltas",
            Error::OutOfSimplex(_) => "OutOfSimplex",
            Error::DegenerateDesign(_) => "DegenerateDesign",
            Error::TooFewObservations { .. } => "TooFewObservations",
            Error::EmptyInterval => "EmptyInterval",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
