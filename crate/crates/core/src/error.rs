use thiserror::Error;

/// Errors raised by the library. Variants separate malformed input from
/// mathematical rejection so callers (the CLI in particular) can map them to
/// different exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("point outside the open domain: {0}")]
    Domain(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Gram matrices of domain and range differ by {deviation:e} (allowed {allowed:e})")]
    GramMismatch { deviation: f64, allowed: f64 },

    #[error("defect padding required: cannot complete a {n_out}x{n_in} map in {mode} mode")]
    DefectPaddingRequired {
        n_in: usize,
        n_out: usize,
        mode: &'static str,
    },

    #[error("resolvent does not exist (condition estimate {condition:e})")]
    SingularResolvent { condition: f64 },

    #[error("not in the Schur class at these samples: {reason}")]
    NotSchur { reason: String, deviation: f64 },

    #[error("operator tuple is not a strict row contraction (row norm {row_norm})")]
    NotStrict { row_norm: f64 },

    #[error("operator tuple is not commuting (commutator residual {residual:e})")]
    NotCommuting { residual: f64 },

    #[error("function is not certified Schur (certificate norm {norm})")]
    Uncertified { norm: f64 },

    #[error("representation fails the *-homomorphism identities (residual {residual:e})")]
    Homomorphism { residual: f64 },

    #[error("operator is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },
}

impl Error {
    /// True for rejections that reflect the mathematics of the input rather
    /// than a malformed request.
    pub fn is_rejection(&self) -> bool {
        !matches!(self, Error::Validation(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
