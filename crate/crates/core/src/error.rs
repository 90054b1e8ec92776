use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("resource limit exceeded for {what}: requested {requested}, limit {limit}")]
    ResourceLimit {
        what: &'static str,
        requested: String,
        limit: String,
    },

    /// The combinatorial second-moment decomposition disagrees with brute
    /// force enumeration. Neither value is preferred.
    #[error(
        "second moment mismatch: decomposition {decomposition} vs enumeration {enumerated} \
         (relative {relative:e})"
    )]
    MomentDiscrepancy {
        decomposition: f64,
        enumerated: f64,
        relative: f64,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
