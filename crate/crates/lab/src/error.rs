use polysweep_core::Error as CoreError;

pub const EXIT_DEGENERATE_GAIT: i32 = 2;
pub const EXIT_INADMISSIBLE_START: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("config: {0}")]
    Config(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed table: {0}")]
    Table(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(e) => match e {
                CoreError::DegenerateGait { .. } => EXIT_DEGENERATE_GAIT,
                CoreError::InadmissibleStart { .. } => EXIT_INADMISSIBLE_START,
                CoreError::InvalidSignal(_)
                | CoreError::NotLipschitz
                | CoreError::InvalidPolyhedron(_)
                | CoreError::DimensionMismatch { .. }
                | CoreError::InvalidGrid(_)
                | CoreError::InvalidGait(_)
                | CoreError::InvalidScenario(_)
                | CoreError::EdgeNotReached { .. }
                | CoreError::InsufficientPeriods { .. }
                | CoreError::EnumerationCap { .. } => EXIT_CONFIG,
                _ => 1,
            },
            LabError::Config(_) | LabError::Json(_) => EXIT_CONFIG,
            LabError::Csv(_) | LabError::Table(_) | LabError::Io(_) => 1,
        }
    }
}
