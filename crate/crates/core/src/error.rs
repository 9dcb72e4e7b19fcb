use thiserror::Error;

/// Crate-wide error type. The CLI maps each variant class to a stable exit code.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("numerical budget breached: {0}")]
    Numerical(String),

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("search exhausted: {0}")]
    SearchExhausted(String),

    #[error("integration stalled at t = {at}: {msg}")]
    Stiffness { at: f64, msg: String },

    #[error("cascade stalled after stage {last_stage}: {msg}")]
    CascadeStall { last_stage: usize, msg: String },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code contract: 0 success, 2 validation, 3 resource,
    /// 4 numerical budget breach, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Contract(_) | Error::NotApplicable(_) => 2,
            Error::Resource(_) | Error::SearchExhausted(_) | Error::Construction(_) => 3,
            Error::Numerical(_)
            | Error::Stiffness { .. }
            | Error::CascadeStall { .. }
            | Error::Topology(_) => 4,
            Error::Io(_) | Error::Json(_) => 5,
            Error::Internal(_) => 70,
        }
    }
}
