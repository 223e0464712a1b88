use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("signal has jumps and no finite Lipschitz constant")]
    NotLipschitz,
    #[error("invalid polyhedron: {0}")]
    InvalidPolyhedron(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("polyhedron is empty")]
    Infeasible,
    #[error("polyhedron is empty at t = {time}")]
    EmptyAt { time: f64 },
    #[error("{constraints} constraints exceed the enumeration cap of {cap}")]
    EnumerationCap { constraints: usize, cap: usize },
    #[error("point violates constraint {index} by {violation:e}")]
    NotMember { index: usize, violation: f64 },
    #[error("vector is not in the normal cone (residual {residual:e}, min coefficient {min_coefficient:e})")]
    NotInNormalCone { residual: f64, min_coefficient: f64 },
    #[error("active normals {active:?} are linearly dependent")]
    LicqFailure { active: Vec<usize> },
    #[error("projection failed to find a KKT point (best violation {violation:e})")]
    ProjectionFailed { violation: f64 },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("inadmissible initial state (constraint {index} violated by {violation:e})")]
    InadmissibleStart { index: usize, violation: f64 },
    #[error("need at least {needed} periods, have {have}")]
    InsufficientPeriods { needed: usize, have: usize },
    #[error("trajectories live on different grids")]
    GridMismatch,
    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: usize, limit: usize },
    #[error("invalid gait: {0}")]
    InvalidGait(String),
    #[error("uniqueness margin vanishes (min margin {margin:e} at t = {time}, zero on {zero_fraction} of the grid)")]
    DegenerateGait {
        margin: f64,
        time: f64,
        zero_fraction: f64,
    },
    #[error("no consistent slip pattern at step {step} (nearest violation {violation:e})")]
    NoSlipPattern { step: usize, violation: f64 },
    #[error("invalid scenario parameters: {0}")]
    InvalidScenario(String),
    #[error("start {start:?} did not reach edge {edge} within its third of the period")]
    EdgeNotReached { start: [f64; 2], edge: usize },
}
