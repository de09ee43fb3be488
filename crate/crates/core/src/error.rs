use thiserror::Error;

/// Errors surfaced by the simulation library.
///
/// `Config` covers anything the caller got wrong when wiring a simulation
/// together (dimension mismatches, invalid schedules, bad hyperparameters).
/// `Domain` covers values outside an operation's mathematical domain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
