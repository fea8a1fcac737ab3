use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    #[error("point {point} out of range for degree {degree}")]
    PointOutOfRange { point: usize, degree: usize },

    #[error("image list is not a bijection on 0..{degree}")]
    NotAPermutation { degree: usize },

    #[error("a group needs at least one generator")]
    NoGenerators,

    /// A configured cap was hit. `limit` names the cap so the caller can raise it.
    #[error("{what}: {required} exceeds the cap of {limit} (raise {flag})")]
    ResourceLimit {
        what: &'static str,
        flag: &'static str,
        limit: u64,
        required: String,
    },

    #[error("group is not transitive on {degree} points")]
    NotTransitive { degree: usize },

    #[error("group is not primitive on {degree} points")]
    NotPrimitive { degree: usize },

    #[error("generator {index} of the subgroup is not an element of the group")]
    NotSubgroup { index: usize },

    #[error("subgroup order {subgroup} exceeds the point stabilizer order {stabilizer}")]
    SubgroupTooLarge { subgroup: String, stabilizer: String },

    #[error("subgroup is not maximal: block stabilizer has order {block_stabilizer}, subgroup has order {subgroup}")]
    NotMaximal {
        subgroup: String,
        block_stabilizer: String,
    },

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("degree {degree} exceeds the supported block width of {max} points")]
    UnsupportedDegree { degree: usize, max: usize },

    /// Signals a bug or inconsistent input data rather than a user error.
    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown group `{0}`")]
    NotFound(String),

    #[error("corrupt fixture `{name}`: expected order {expected}, computed {actual}")]
    CorruptFixture {
        name: String,
        expected: String,
        actual: String,
    },

    #[error("registry error: {0}")]
    Registry(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn resource(
        what: &'static str,
        flag: &'static str,
        limit: u64,
        required: impl ToString,
    ) -> Self {
        Error::ResourceLimit {
            what,
            flag,
            limit,
            required: required.to_string(),
        }
    }
}
