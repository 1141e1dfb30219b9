//! Exact computation of p-adic Haar volumes, local densities, tangent
//! Lambda-cones with multiplicities, and local Crofton integrals for a
//! tractable class of definable subsets of Q_p^n.
//!
//! Everything numeric is an exact rational; digit precision only gates the
//! membership predicates of [`padic`].

pub mod cfunc;
pub mod cone;
pub mod crofton;
pub mod density;
pub mod error;
pub mod padic;
pub mod setdef;

pub use error::Error;
pub use padic::{Prime, Q, Z};
