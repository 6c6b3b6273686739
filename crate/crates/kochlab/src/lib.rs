//! Numerical laboratory for special flows over irrational rotations under
//! power-singularity roofs: exact circle arithmetic and continued fractions,
//! Birkhoff-sum bounds, the special and product flows, cusp-cut partitions
//! with symbolic codings, the f-bar matching metric with its combinatorics,
//! and seeded experiment drivers.

pub mod coding;
pub mod error;
pub mod experiments;
pub mod fbar;
pub mod flow;
pub mod roof;
pub mod rotation;

pub use error::{Error, Result};
