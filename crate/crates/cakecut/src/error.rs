use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error", content = "detail")]
pub enum CakeError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no such cut")]
    NoSuchCut,
    #[error("cut is not unique: {0}")]
    NonUnique(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolation(String),
    #[error("contract violated: {0}")]
    ContractViolation(String),
    #[error("promise {promise} violated: {detail}")]
    PromiseViolation { promise: u8, detail: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl CakeError {
    pub fn kind(&self) -> &'static str {
        match self {
            CakeError::Domain(_) => "DomainError",
            CakeError::NoSuchCut => "NoSuchCut",
            CakeError::NonUnique(_) => "NonUnique",
            CakeError::Resource(_) => "ResourceError",
            CakeError::InternalInvariantViolation(_) => "InternalInvariantViolation",
            CakeError::ContractViolation(_) => "ContractViolation",
            CakeError::PromiseViolation { .. } => "PromiseViolation",
            CakeError::Geometry(_) => "GeometryError",
            CakeError::Parse(_) => "ParseError",
        }
    }
}

pub type Result<T> = std::result::Result<T, CakeError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(CakeError::Domain(msg.into()))
}
