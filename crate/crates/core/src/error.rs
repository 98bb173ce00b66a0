use thiserror::Error;

/// Errors raised by the model, interpolation and pricing routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain on which the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The model state is missing data the operation needs (fixings, live rates).
    #[error("state error: {0}")]
    State(String),

    /// A configuration or construction parameter is invalid.
    #[error("invalid config: {0}")]
    Config(String),

    /// A price lies outside the no-arbitrage bounds of the Black formula.
    #[error("price {price} violates the {bound} bound {limit}")]
    OutOfBounds {
        price: f64,
        bound: Bound,
        limit: f64,
    },

    /// A numerical routine failed to produce a finite result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Which arbitrage bound a caplet price violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Discounted intrinsic value.
    Lower,
    /// Discounted forward (the zero-strike price).
    Upper,
}

impl std::fmt::Display for Bound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bound::Lower => write!(f, "lower (intrinsic)"),
            Bound::Upper => write!(f, "upper (forward)"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
