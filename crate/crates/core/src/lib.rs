//! Monte Carlo and quadrature tools for the mollified parabolic Anderson model
//!
//! ```text
//! ∂_t u_ε = ½Δu_ε + (ξ_ε − C_ε) u_ε,   ξ_ε = ξ ⋆ ρ_ε
//! ```
//!
//! The moments `E[u_ε(t,x)^n]` are estimated through the Feynman–Kac
//! representation, where the noise average turns into the exponential of
//! self- and mutual-intersection functionals of `n` independent Brownian
//! paths. A lattice finite-difference solver driven by sampled white noise
//! serves as an independent oracle at fixed `ε`.
//!
//! Module map:
//!
//! * [`kernel`]: mollifiers, covariance `R = ρ⋆ρ`, the exact self-intersection
//!   mean `ν_ε(t)`, the renormalization constant and its limit constants.
//! * [`paths`]: reproducible Brownian path sampling.
//! * [`ilt`]: Riemann-sum intersection functionals and the dyadic triangle
//!   decomposition.
//! * [`moments`]: Feynman–Kac moment estimators, exponential moments, the
//!   small-time bound and the explosion probe.
//! * [`oracle`]: lattice noise, mollification and the split-step PDE solver.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ilt;
pub mod kernel;
pub mod moments;
pub mod oracle;
pub mod paths;
pub mod quad;
pub mod stats;

pub use error::{Error, Result};
pub use kernel::{Family, MollifierKernel, RenormSpec};
pub use paths::{derive_seed, BrownianPath, SeedSpec};
pub use stats::{Estimate, Warning};
