use thiserror::Error;

/// Errors raised by map evaluation, functionals and spec parsing.
///
/// Variants fall into two families that the CLI reports with different exit
/// codes: malformed input (`Spec`, `InvalidConfig`) and violated
/// preconditions (everything else).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the closed unit disk")]
    Domain { x: f64, y: f64 },

    #[error("hamiltonian `{label}` is not constant on the boundary (spread {spread:e} at t = {t})")]
    BoundaryNotConstant { label: String, t: f64, spread: f64 },

    #[error("map is not symplectic: max |det J - 1| = {residual:e} exceeds {tol:e}")]
    NotSymplectic { residual: f64, tol: f64 },

    #[error("boundary_identity required: `{0}` is not known to fix the boundary pointwise")]
    BoundaryIdentityRequired(String),

    #[error("map does not fix the anchor ({x}, {y}): displacement {displacement:e}")]
    AnchorNotFixed { x: f64, y: f64, displacement: f64 },

    #[error("origin-fixing required: {0}")]
    OriginNotFixed(String),

    #[error("endpoint is not the identity (max displacement {0:e})")]
    EndpointNotIdentity(f64),

    #[error("boundary restriction is not an orientation-preserving circle diffeomorphism: {0}")]
    NonMonotoneLift(String),

    #[error("unsupported isotopy combination: {0}")]
    UnsupportedCombination(String),

    #[error("eta-independence check failed: {first} vs {second} (tolerance {tol:e})")]
    IndependenceViolated { first: f64, second: f64, tol: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("spec error: {0}")]
    Spec(String),
}

impl Error {
    /// True for malformed input, false for violated mathematical preconditions.
    pub fn is_spec_error(&self) -> bool {
        matches!(self, Error::Spec(_) | Error::InvalidConfig(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
