use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("signature matrix violates J = J*, J^2 = I: {0}")]
    InvalidSignature(String),

    #[error("J-module R(x) is singular at x = {x}")]
    SingularJModule { x: f64 },

    #[error("invalid J-module at x = {x}: {reason}")]
    InvalidJModule { x: f64, reason: String },

    #[error("degenerate weight L(x) at x = {x}: radicand eigenvalue {min_eigenvalue:e}")]
    DegenerateWeight { x: f64, min_eigenvalue: f64 },

    #[error("kernel diagonal at x = {x} needs the principal-value path")]
    PvDiagonal { x: f64 },

    #[error("ill-conditioned operator: condition number {condition:e} exceeds {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },

    #[error("residual {residual:e} exceeds {limit:e}: {what}")]
    Residual { what: String, residual: f64, limit: f64 },

    #[error("point z = {re}{im:+}i lies on the cut; use boundary values")]
    OnCut { re: f64, im: f64 },

    #[error("x = {x} is within the endpoint exclusion zone (margin {margin:e})")]
    EndpointSingularity { x: f64, margin: f64 },

    #[error("Hamiltonian is inconsistent: {0}")]
    InconsistentHamiltonian(String),

    #[error("ODE integration did not converge after {halvings} halvings (last change {change:e})")]
    OdeDivergence { halvings: usize, change: f64 },

    #[error("argument {x} outside the working range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
