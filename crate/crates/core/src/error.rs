use thiserror::Error;

/// Errors produced by the planning, folding and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric input fell outside the domain of the quantity it represents.
    #[error("{what} = {value} is outside {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    /// A bit string had a length incompatible with the requested fold.
    #[error("bit length {len} is invalid: {reason}")]
    Length { len: usize, reason: &'static str },

    /// Not enough raw bits to produce the requested final key.
    #[error("insufficient raw bits: {available} available, {required} required")]
    Shortage { available: usize, required: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("i/o error: {0}")]
    Io(String),

    /// Malformed serialized key material.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
