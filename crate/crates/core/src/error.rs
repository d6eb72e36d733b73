use std::io;

use thiserror::Error;

use crate::ids::{Day, ObjectId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },

    #[error("dataset is empty after filtering")]
    EmptyDataset,

    #[error("unknown object id {0}")]
    UnknownObject(ObjectId),

    #[error("day {day} outside data range [{min}, {max}]")]
    DayOutOfRange { day: Day, min: Day, max: Day },

    #[error("window ({start}, {end}] exceeds data range ending at day {max}")]
    WindowOutOfRange { start: Day, end: Day, max: Day },

    #[error("day {requested} is after the snapshot cut {cut}")]
    Lookahead { requested: Day, cut: Day },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("score table and truth ranking cover different candidate sets")]
    DomainMismatch,

    #[error("bad binary graph file: {0}")]
    BadBinary(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
