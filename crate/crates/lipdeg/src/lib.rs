//! Quantitative tools for degrees of Lipschitz maps: exterior algebra,
//! cohomology ring presentations, a scalability checker, Littlewood–Paley
//! analysis on periodic grids, degree-bound pipelines and explicit map
//! constructions.

pub mod construct;
pub mod degree;
pub mod error;
pub mod exec;
pub mod exterior;
pub mod linalg;
pub mod lp;
pub mod ring;
pub mod scalable;
pub mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use exterior::{ExteriorElement, MultiIndex};
pub use scalar::{Rational, Scalar};
