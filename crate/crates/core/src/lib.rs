//! Regularized integrals and traces for polyhomogeneous symbols.
//!
//! The crate is organised bottom-up:
//!
//! * [`symbol`] and [`expansion`]: symbol expansions on R^p and asymptotic
//!   expansions in one large variable.
//! * [`regint`]: partie finie and residue integrals, the change of variables
//!   anomaly and the Stokes defect.
//! * [`asym`]: the parametric expansion of `∫ B(ξ) Q(ξ, λ) dξ`.
//! * [`spectral`]: heat traces and zeta functions of flat tori.
//! * [`dixmier`]: logarithmic eigenvalue averages and Tauberian checks.
//! * [`param_trace`]: the symbol valued trace of parameter dependent
//!   multipliers on the circle.
//! * [`cone`]: profile spaces, forms on cones and the Thom homotopy.
//! * [`acceptance`]: the ten end-to-end acceptance checks.

pub mod acceptance;
pub mod asym;
pub mod cone;
pub mod dixmier;
pub mod em;
pub mod error;
pub mod expansion;
pub mod param_trace;
pub mod poly;
pub mod quad;
pub mod regint;
pub mod spectral;
pub mod sum;
pub mod symbol;

pub use error::{Error, Result};
