use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix data has {len} values, expected {rows}x{cols}")]
    BadMatrixData { rows: usize, cols: usize, len: usize },

    #[error("supervision mask row {row} allows no prototype")]
    EmptyMaskRow { row: usize },

    #[error("assignment entry ({row}, {col}) is negative or not finite")]
    InvalidAssignment { row: usize, col: usize },

    #[error("row {row} has no mass on its allowed prototypes")]
    ZeroAllowedMass { row: usize },

    #[error("no mass on allowed O prototypes but the budget is {budget}")]
    ZeroOBlockMass { budget: usize },

    #[error(
        "ratio budget {budget} infeasible for {n} rows: {forced_o} rows must be O and \
         {forced_other} rows cannot be O"
    )]
    InfeasibleBudget {
        budget: usize,
        n: usize,
        forced_o: usize,
        forced_other: usize,
    },

    #[error("O ratio {0} outside [0, 1]")]
    RatioOutOfRange(f64),

    #[error("scatter identity violated (residual {residual:e}); centroids are not optimal for the assignment")]
    ScatterIdentity { residual: f64 },

    #[error(
        "total scatter could not be factorized even with ridge {ridge:e} \
         (trace {trace:e}, smallest pivot {min_pivot:e})"
    )]
    Factorization {
        ridge: f64,
        trace: f64,
        min_pivot: f64,
    },

    #[error("at least two prototypes are required for a discriminative subspace, got {0}")]
    TooFewPrototypes(usize),

    #[error("cannot form {target} clusters from {points} points")]
    WardTarget { target: usize, points: usize },

    #[error("tag {tag} needs {needed} labeled rows for initialization, found {found}")]
    InsufficientLabels {
        tag: String,
        needed: usize,
        found: usize,
    },

    #[error("invalid tag map: {0}")]
    InvalidTagMap(String),

    #[error("invalid label {label} at row {row}")]
    InvalidLabel { row: usize, label: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn dims(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
