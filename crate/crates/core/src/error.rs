use thiserror::Error;

/// Errors raised by the geometric constructions and their numerical checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n = {expected}, found n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{what} validation failed: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Validation {
        what: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("vector is not tangent to the anti-de Sitter space (residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("parameter {t} with step {step} leaves the curve domain [{lo}, {hi}]")]
    Domain { t: f64, step: f64, lo: f64, hi: f64 },

    #[error("degenerate curve: horizontal speed {speed:.3e} vanishes")]
    DegenerateCurve { speed: f64 },

    #[error("degenerate radius: r = 0 is not admissible for s = plus")]
    DegenerateRadius,

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("lift does not take values in the Stiefel manifold (reconstruction residual {residual:.3e})")]
    NotStiefelValued { residual: f64 },

    #[error("lift is not horizontal for the twistor fibration: {0}")]
    NotHorizontal(String),

    #[error("immersion failure: smallest singular value {sigma:.3e} of the tangent frame")]
    Immersion { sigma: f64 },

    #[error("normal lift is not normal to the patch (residual {residual:.3e})")]
    NotNormal { residual: f64 },

    #[error("shape operator not certifiable: least-squares residual {residual:.3e}")]
    NotCertifiable { residual: f64 },

    #[error("exceptional case 2*lambda - mu = {denominator:.3e}: |mu| = 2 with lambda = mu/2")]
    ExceptionalCase { denominator: f64 },

    #[error("invalid CKO form: {0}")]
    InvalidCkoForm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
