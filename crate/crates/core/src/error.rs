use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Bad arguments: sizes, site subsets, parameters out of range.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed ket expression or state file.
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// The operation is not defined for the given input (e.g. Q_C on qutrits).
    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("spectrum expected real but has imaginary part {imag:.3e}")]
    ComplexSpectrum { imag: f64 },

    #[error("eigensolver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// True for failures of the numeric kernel rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian { .. }
                | Error::NotPsd { .. }
                | Error::ComplexSpectrum { .. }
                | Error::NoConvergence { .. }
        )
    }
}
