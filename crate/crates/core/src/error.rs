use std::io;

use thiserror::Error;

use crate::units::Hz;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Band plan or sweep parameters that cannot describe a valid grid.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("frequency {freq} outside band [{lo}, {hi})")]
    OutOfBand { freq: Hz, lo: Hz, hi: Hz },

    /// The front-end refused to tune.
    #[error("cannot tune to {freq}: tunable range is [{lo}, {hi}]")]
    Tune { freq: Hz, lo: Hz, hi: Hz },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Scene document rejected; `path` points at the offending field.
    #[error("scene error at `{path}`: {message}")]
    Scene { path: String, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
