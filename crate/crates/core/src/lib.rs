//! Numerical tools for extension operators attached to vertically and
//! horizontally shifted paraboloids.
//!
//! The crate evaluates `E_(tau0, xi0) f(t, x) = ∫ exp(i(t(|xi - xi0|^2 + tau0) + x·xi)) f(xi) dxi`
//! on bounded spacetime boxes, measures mixed Lebesgue norms with certified
//! truncation bounds, applies the symmetry group of the paraboloid, and runs
//! the sequence and search experiments used to study extremizers of pairs of
//! extension operators.

pub mod compact;
pub mod corpus;
pub mod czt;
pub mod error;
pub mod exponents;
pub mod extension;
pub mod grids;
pub mod interp;
pub mod norms;
pub mod par;
pub mod runner;
pub mod search;
pub mod sequences;
pub mod symmetry;

pub use error::{Error, Result};
pub use exponents::Exponents;
pub use extension::{extend, gaussian_extension_oracle, ParaboloidShift};
pub use grids::{FrequencyGrid, FrequencyProfile, SpacetimeField, SpacetimeGrid};
pub use norms::{quotient_pair, quotient_single, NormResult, QuotientResult};
pub use symmetry::Symmetry;

pub use num_complex::Complex64;
