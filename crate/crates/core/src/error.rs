use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument outside the operation's domain (non-prime p, zero valuation, non-unit, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configured size bound would be exceeded.
    #[error("resource bound exceeded: {what} needs {needed}, bound is {bound}")]
    Resource {
        what: &'static str,
        needed: String,
        bound: u64,
    },

    /// The requested output needs more p-adic digits than are available.
    #[error("insufficient precision: need {need} digits, have {have}")]
    Precision { need: u32, have: u32 },

    #[error("undecidable at precision {precision}: {reason}")]
    Undecidable { precision: u32, reason: String },

    /// A soft deadline passed; checked only between whole levels or spheres.
    #[error("deadline reached after {completed}")]
    Deadline { completed: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
