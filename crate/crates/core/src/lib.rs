//! Quantization of branched Hamiltonians.
//!
//! The kinetic energy `E(p)` of the Lagrangian `xdot^4/4 - kappa xdot^2/2` is
//! three-valued between two cusps. Wavefunctions live on three momentum
//! branches glued at the cusps (the folded picture) or on one line obtained by
//! unfolding them. This crate assembles Hamiltonians in both pictures, the
//! dual position-space wire, kernel realizations of general potentials and
//! metric graphs, then solves, evolves and cross-checks them together with the
//! classical noncanonical dynamics.

// negated comparisons deliberately treat NaN as out of range
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// failures carry the partial trajectory by value
#![allow(clippy::result_large_err)]

pub mod classical;
pub mod cubic;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod graph;
pub mod grid;
pub mod operators;
pub mod potential;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Branch, BranchedDomain, CuspData, DispersionLaw, Junction};
pub use grid::{CoordinateKind, Grid};
pub use operators::OperatorMatrix;
pub use potential::PotentialSpec;
