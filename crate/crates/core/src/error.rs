use thiserror::Error;

use crate::bspline_space::SplineRef;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("integer overflow in index arithmetic: {0}")]
    Overflow(&'static str),

    #[error("level {level} exceeds the configured maximum {max_level}")]
    DepthCap { level: u32, max_level: u32 },

    #[error("invalid level request: {0}")]
    Level(String),

    #[error("point outside the unit domain")]
    Domain,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{0} is not a member of the hierarchical generator")]
    NotInGenerator(SplineRef),

    #[error("functions not in the hierarchical generator: {}", list(.0))]
    NotInGeneratorMany(Vec<SplineRef>),

    #[error("lineage member {0} has no refined parent")]
    Orphan(SplineRef),

    #[error("index {0} outside the valid range of its level")]
    OutOfRange(String),

    #[error("search space exceeds the cap of {0} candidates")]
    SearchCap(u64),

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn list(v: &[SplineRef]) -> String {
    v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
