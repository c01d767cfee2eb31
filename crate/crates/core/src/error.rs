use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A vertex that does not belong to the topology it was used with.
    #[error("invalid vertex {vertex}: {reason}")]
    InvalidVertex { vertex: String, reason: String },

    #[error("tree depth {depth} exceeds the encoding cap of {cap}")]
    DepthCap { depth: u64, cap: u64 },

    #[error("invalid argument `{name}`: {reason}")]
    Argument { name: &'static str, reason: String },

    /// A crossing window that contains no parity-valid vertex after rounding.
    #[error("degenerate {window} window: {detail}")]
    DegenerateWindow { window: &'static str, detail: String },

    #[error("every replica was truncated; raise the size cap (currently {size_cap})")]
    AllTruncated { size_cap: u64 },

    #[error("subcritical at p = {p}: every replica died before height {height}")]
    Subcritical { p: f64, height: u64 },

    #[error("{censored} of {replicas} replicas hit the step cap (more than 1% censored)")]
    ExcessCensoring { censored: u64, replicas: u64 },

    #[error("stream allocation mismatch: {0}")]
    StreamMismatch(String),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Argument { name, reason: reason.into() }
    }
}

pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Error {
    Error::arg(name, reason)
}
