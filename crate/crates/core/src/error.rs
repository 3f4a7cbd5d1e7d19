use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// A precondition on an argument was violated (index range, sign, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must share a size or a grid do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Reconstructed eigenvalues have imaginary parts beyond tolerance, so
    /// the input cannot come from a real symmetric tensor.
    #[error("non-real spectrum: max |Im| = {max_imag:.3e} exceeds tolerance {tol:.3e}")]
    NonRealSpectrum { max_imag: f64, tol: f64 },

    /// A grid evaluation produced NaN or infinity.
    #[error("non-finite value at node {node} while evaluating {context}")]
    NonFinite { node: usize, context: &'static str },

    /// The Thomas elimination hit a vanishing pivot.
    #[error("linearization not invertible: zero pivot in row {row}")]
    SingularLinearization { row: usize },

    /// Every tail sample sits below the truncation floor.
    #[error("decay too fast to estimate")]
    DecayTooFast,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
