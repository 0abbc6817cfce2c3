use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("POVM is not complete (deviation {0:e})")]
    Incomplete(f64),
    #[error("likelihood score needs tetrahedral directions")]
    NotTetrahedral,
    #[error("measurement always abstains")]
    AlwaysAbstains,
    #[error("element leaks outside the support of the abstention complement ({0:e})")]
    OutsideSupport(f64),
    #[error("optimum unreachable for c0 = {0} (needs 0 < c0 < 1)")]
    OptimumUnreachable(f64),
    #[error("constraint lambda_bar_1 = 1 infeasible for c0 = {0}")]
    ConstraintInfeasible(f64),
    #[error("no reference program for {kind} at c0 = {c0}; interpolation between tabulated rows is not supported")]
    Untabulated { kind: String, c0: f64 },
    #[error("program leaks amplitude at positions {0:?}")]
    Leak(Vec<i32>),
    #[error("walk ran off the lattice at position {0}")]
    LatticeOverflow(i32),
    #[error("amplitude outside the four declared modes: {0}")]
    OutsideModes(String),
    #[error("outcome probabilities sum to {0}")]
    BadProbabilities(f64),
    #[error("no accepted trials")]
    NoAccepted,
    #[error("zero shots requested")]
    ZeroShots,
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("program parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
