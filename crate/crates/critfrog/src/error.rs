use std::path::PathBuf;

use critfrog_core::Error as CoreError;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const ACCEPTANCE: i32 = 3;
    pub const RESOURCE_CAP: i32 = 4;
}

#[derive(Debug)]
pub enum HarnessError {
    /// A spec or parameter that does not fit the operation's schema.
    Spec { field: String, reason: String },
    Core(CoreError),
    /// Some replicas failed; the rest of the envelope was still written.
    PartialFailure { failed: usize, total: u64 },
    /// A stored envelope whose aggregates do not match its rows.
    Mismatch { path: PathBuf, detail: String },
    AcceptanceFailed { failed: Vec<String> },
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    pub fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HarnessError::Spec { field: field.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Spec { .. } | HarnessError::Mismatch { .. } => exit::VALIDATION,
            HarnessError::Core(e) => match e {
                CoreError::AllTruncated { .. } | CoreError::ExcessCensoring { .. } | CoreError::DepthCap { .. } => {
                    exit::RESOURCE_CAP
                }
                _ => exit::VALIDATION,
            },
            HarnessError::PartialFailure { .. } => exit::RESOURCE_CAP,
            HarnessError::AcceptanceFailed { .. } => exit::ACCEPTANCE,
            HarnessError::Io { .. } => exit::IO,
        }
    }
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Spec { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            HarnessError::Core(e) => e.fmt(f),
            HarnessError::PartialFailure { failed, total } => {
                write!(f, "{failed} of {total} replicas failed; see `failures` in summary.json")
            }
            HarnessError::Mismatch { path, detail } => write!(f, "{}: {detail}", path.display()),
            HarnessError::AcceptanceFailed { failed } => write!(f, "acceptance failed: {}", failed.join(", ")),
            HarnessError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Core(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<CoreError> for HarnessError {
    fn from(e: CoreError) -> Self {
        HarnessError::Core(e)
    }
}
