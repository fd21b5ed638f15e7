//! Consensus seeking on weighted dependency digraphs whose Laplacian may have
//! several zero eigenvalues.
//!
//! The crate computes the eigenprojection of the Laplacian (equivalently the
//! normalized matrix of maximum in-forests), the orthogonal projection `S`
//! onto the consensus domain `R(L) + span(1)`, the alternative protocol
//! matrices `P S` and `L~ = (I - S)/tau + L S`, and simulates the protocols
//! built from them.
//!
//! Modules, bottom-up:
//! - [`scalar`], [`matrix`], [`spectral`], [`expm`]: dense linear algebra over
//!   exact rationals or `f64`.
//! - [`digraph`]: components, final classes, maximum in-forests.
//! - [`laplacian`]: `L`, `P = I - tau L`, eigenprojection, Cesàro limits.
//! - [`projection`]: `U`, `S`, `P S`, `L~`, and the approximation error of `L~`.
//! - [`dynamics`]: trajectories and limits of the five protocols.
//! - [`invariants`]: the full check suite run by `consensus verify`.

pub mod digraph;
pub mod dynamics;
pub mod error;
pub mod expm;
pub mod fixtures;
pub mod invariants;
pub mod laplacian;
pub mod matrix;
pub mod projection;
pub mod scalar;
pub mod spectral;

pub use digraph::{ComponentStructure, InForest, WeightedDigraph};
pub use error::{Error, Result};
pub use laplacian::{build_laplacian, LaplacianSystem};
pub use matrix::{Matrix, Vector};
pub use scalar::{Backend, Rational, Scalar};
