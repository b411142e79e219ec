use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{var}` has no value `{value}`")]
    UnknownValue { var: String, value: String },
    #[error("variable `{0}` is not binary; use `name=value`")]
    NotBinary(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("invalid domain for `{var}`: {reason}")]
    InvalidDomain { var: String, reason: String },
    #[error("conflicting values for `{0}`")]
    Conflict(String),
    #[error("variable `{0}` is already assigned")]
    AlreadyAssigned(String),
    #[error("variable `{0}` is not assigned")]
    Unassigned(String),
    #[error("literal over `{0}` was never asserted")]
    NotAsserted(String),
    #[error("adding this child would create a cycle")]
    Cycle,
    #[error("node {0} is a literal and cannot have children")]
    LiteralParent(usize),
    #[error("node {0} does not exist")]
    NoSuchNode(usize),
    #[error("graph has no root")]
    NoRoot,
    #[error("and-node {0} has children sharing atoms")]
    NotDecomposable(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid system description: {0}")]
    Invalid(String),
    #[error("enumeration space {size} exceeds cap {cap}")]
    CapExceeded { size: u128, cap: u128 },
    #[error("invalid jointree: {0}")]
    InvalidJointree(String),
    #[error("no clique covers the ports of component `{0}`")]
    NoCoveringClique(String),
    #[error("invalid cost function: {0}")]
    InvalidCost(String),
    #[error("extraction invariant violated: {0}")]
    Extraction(String),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn is_cap_exceeded(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}

/// Fails with [`Error::CapExceeded`] when `size > cap`.
pub(crate) fn check_cap(size: u128, cap: u128) -> Result<()> {
    if size > cap {
        Err(Error::CapExceeded { size, cap })
    } else {
        Ok(())
    }
}
