//! Exact computation and verification of twisted and inverted Kloosterman
//! sums over finite étale algebras, together with the Newton-polytope
//! analysis of the associated toric exponential sums.
//!
//! All character-sum values are exact elements of cyclotomic integer rings;
//! floating point enters only when comparing archimedean absolute values
//! against square-root cancellation bounds.

pub mod charval;
pub mod error;
pub mod etale;
pub mod ffield;
pub mod harness;
pub mod polytope;
pub mod sums;

pub use error::{Error, Result};
