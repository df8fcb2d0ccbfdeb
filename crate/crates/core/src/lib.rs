//! Hopf real hypersurfaces in complex hyperbolic space ℂHⁿ built from
//! horizontal data on twistor spaces of the indefinite complex 2-plane
//! Grassmannian, together with finite-difference certification of their
//! curvature identities.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: the signature-(1, n) Hermitian form, U(1, n), 𝔲(1, n), `exp`.
//! - [`fibration`]: the Hopf fibration H₁^{2n+1} → ℂHⁿ and curve curvature.
//! - [`twistor`]: Stiefel pairs, the para-quaternionic frame, curve families
//!   and lift normalisation.
//! - [`hopf`]: hypersurface patches, shape operators and the classical tubes.
//! - [`cko`]: CKO-forms, Maurer–Cartan integrability and the μ = 2 family.
//! - [`report`]: run configuration, verification commands and report output.

pub mod cko;
pub mod error;
pub mod fibration;
pub mod hopf;
pub mod linalg;
pub mod report;
pub mod twistor;

pub use error::{Error, Result};
pub use linalg::{AlgebraElement, GroupElement, IndefVector, SignatureMatrix, C64, I};

/// Default tolerances.
pub mod tol {
    /// Structural membership (group, algebra, Stiefel, anti-de Sitter).
    pub const MEMBERSHIP: f64 = 1e-10;
    /// Finite-difference geometric residuals.
    pub const FD_RESIDUAL: f64 = 1e-5;
    /// Horizontality of lift coefficients.
    pub const HORIZONTAL: f64 = 1e-8;
    /// Tangency of a vector to the anti-de Sitter space.
    pub const TANGENCY: f64 = 1e-8;
    /// Default finite-difference step.
    pub const FD_STEP: f64 = 1e-4;
    /// Eigenvalues closer than this share a multiplicity bucket.
    pub const CLUSTER: f64 = 5e-4;
    /// Smallest admissible singular value of a tangent frame.
    pub const IMMERSION: f64 = 1e-6;
    /// Normal-lift orthogonality on built patches.
    pub const NORMAL: f64 = 1e-6;
}
