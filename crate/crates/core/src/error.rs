use thiserror::Error;

/// Errors surfaced by the exact-arithmetic stack and the classifier.
///
/// Every operation that cannot certify its answer at the working precision
/// reports `InsufficientPrecision` instead of guessing; callers can retry
/// with a larger precision budget.
#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient precision: {context} (working precision {precision} digits)")]
    InsufficientPrecision { context: String, precision: i64 },

    #[error("division by zero (or by an element that is zero to working precision)")]
    DivisionByZero,

    #[error("valuation of (exact) zero requested")]
    ValuationOfZero,

    #[error("element is not a cube: {0}")]
    NotACube(String),

    #[error("elements belong to different fields")]
    FieldMismatch,

    #[error("residue field degree {0} exceeds the supported bound of 63")]
    ResidueFieldTooLarge(usize),

    #[error("modulus of degree {degree} is reducible: divisible by {factor:#b}")]
    ReducibleModulus { degree: usize, factor: u64 },

    #[error("polynomial is not Eisenstein: {0}")]
    NotEisenstein(String),

    #[error("singular model: discriminant is zero to working precision")]
    SingularModel,

    #[error("no potential good reduction: v(j) = {vj} < 0")]
    NotPotentialGoodReduction { vj: i64 },

    #[error("inertia acts abelianly (slope polynomial splits over the maximal unramified extension): {0}")]
    AbelianInertia(String),

    #[error("cube root unavailable in this field: construct the good-reduction field first")]
    FieldTooSmall,

    #[error("descriptor error: {0}")]
    Descriptor(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn insufficient(context: impl Into<String>, precision: i64) -> Self {
        Error::InsufficientPrecision { context: context.into(), precision }
    }
}
