use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("no diagonal planes: configuration has fewer than two points")]
    NoDiagonalPlanes,

    #[error("disconnected base space: two points in d=1 cannot swap order off the diagonal")]
    DisconnectedBaseSpace,

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("enumeration budget exceeded: n = {n} is above the cap of {cap}")]
    BudgetExceeded { n: usize, cap: usize },

    #[error("configuration degenerate: {0}")]
    Degenerate(String),

    #[error("solver failure after {sweeps} sweeps (last relative decrease {last_decrease:e})")]
    SolverFailure { sweeps: usize, last_decrease: f64 },

    #[error("contract before verifying: edge {0} has zero length")]
    ContractFirst(usize),

    #[error("degenerate vertex {0}: an incident edge has zero length")]
    DegenerateVertex(usize),

    #[error("direction not allowed: {0}")]
    NotAllowed(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("out of theorem scope: {0}")]
    OutOfScope(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("estimation failed: {0}")]
    EstimationFailed(String),

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("collision: {0}")]
    Collision(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
