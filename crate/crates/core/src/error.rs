use thiserror::Error;

use crate::memory_model::{ItemId, Seconds};

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unseen item: recall is undefined before the first presentation")]
    UnseenItem,

    #[error("time went backwards: last presentation at {last}, now {now}")]
    TimeWentBackwards { last: Seconds, now: Seconds },

    #[error("degenerate posterior: the observation has zero likelihood everywhere on the grid")]
    DegeneratePosterior,

    #[error("operation not available in this mode: {0}")]
    Mode(&'static str),

    #[error("unknown item {0}")]
    UnknownItem(ItemId),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
