//! Adiabatic (non-abelian Berry) connections, curvatures and holonomies for the
//! isospectral family `H(λ, μ) = U(λ, μ) H₀ U(λ, μ)†`, where `U` is a displacement
//! followed by a squeeze and `H₀ = N(N-1)…(N-m+1)` has an m-fold degenerate vacuum.
//!
//! The crate carries two independent routes to every geometric quantity:
//!
//! - closed forms ([`connection`], [`curvature`]) evaluated directly from the
//!   parameters, and
//! - a finite-difference oracle ([`oracle`]) that builds the vacuum frame on a
//!   truncated Fock space ([`fock`], [`family`]) and differentiates it.
//!
//! [`holonomy`] integrates the connection around loops and measures the Lie
//! algebra generated by the resulting holonomies.

pub mod connection;
pub mod curvature;
pub mod error;
pub mod family;
pub mod fock;
pub mod holonomy;
pub mod json;
pub mod lie;
pub mod linalg;
pub mod oracle;
pub mod path;

pub use error::{Error, Result};
pub use family::{GeneralizedPoint, ParameterPoint};
pub use fock::TruncatedSpace;

/// Double precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense, heap allocated complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
