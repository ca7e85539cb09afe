use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("set elements must be strictly increasing (position {position})")]
    UnsortedSet { position: usize },

    #[error("similarity is undefined for two empty sets")]
    UndefinedSimilarity,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value {value} is outside the attainable range [0, {max}] for {measure}")]
    Range {
        value: f64,
        max: f64,
        measure: &'static str,
    },

    #[error("{0} is only defined for equal-size sets (beta = 1)")]
    UnsupportedParametrization(&'static str),

    #[error("point {id} is empty")]
    EmptyPoint { id: usize },

    #[error("no points")]
    NoPoints,

    #[error("map evaluation exceeded {cap} live paths at level {level}")]
    MapBlowUp { level: usize, cap: usize },

    #[error("threshold {threshold} is not attainable")]
    Infeasible { threshold: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
