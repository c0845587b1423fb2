//! Bound states of renormalized point interactions on two- and three-dimensional
//! Riemannian manifolds.
//!
//! Everything is expressed in natural units `ħ = 2m = 1`, so the flat heat kernel is
//! `(4πt)^{-D/2} exp(-d²/4t)` and a bound state at energy `E = -ν²` is a zero of an
//! eigenvalue branch of the principal matrix `Φ(-ν²)`.
//!
//! The crate is `no_std` and needs only `alloc`; IO, the CLI and parallel drivers
//! live in the `heatpoint` companion crate.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
mod error;
pub mod linalg;
pub mod manifold;
pub mod perturb;
pub mod principal;
pub mod quadrature;
pub mod rgflow;
pub mod spectral;
pub mod specfun;
pub mod wavefield;

pub use error::{Error, Result};
pub use manifold::{ManifoldSpec, Point};
pub use principal::{CenterSet, PrincipalMatrix, QuadratureConfig};
pub use spectral::{BoundState, EigenSystem};
