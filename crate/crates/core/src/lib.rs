//! Fixed points and multipliers of iterated complex polynomials.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod identities;
pub mod poly;
pub mod rootfind;
pub mod sampling;
pub mod search;
pub mod serde_complex;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
pub use poly::{AffineMap, Polynomial};
pub use rootfind::{find_roots, RootFindConfig, RootSet};
