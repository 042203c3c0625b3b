//! Certified flat-norm approximation of area-minimizing integral currents
//! on cubical grids.
//!
//! Given an integral `(N-2)`-cycle `B` on a box grid, the crate searches
//! nested refinements for a polyhedral `(N-1)`-current `T'` with `∂T' = B`
//! and an exact, checkable certificate that `T'` is close in flat norm to
//! an area minimizer of `B`.

pub mod approximate;
pub mod cli;
pub mod error;
pub mod flatnorm;
pub mod chain;
pub mod grid;
pub mod lp;
pub mod minimizer;
pub mod rational;
pub mod region;

pub use error::{Error, ParseError, Result};
pub use grid::{build_grid, CellComplex, CellKey, GridSpec};
pub use rational::Q;
