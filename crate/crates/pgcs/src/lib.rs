//! Compressive recovery of signals defined on perturbed graphs.
//!
//! A graph signal that is sparse in the Graph Fourier Transform (GFT) basis of
//! an *actual* graph is acquired through compressive linear measurements, but
//! only a *nominal* graph is known, differing from the actual one by a few
//! edge additions or deletions. This crate recovers both the signal and the
//! edge corrections by cross-validated model selection:
//!
//! - [`graph`]: graphs, Laplacians, eigendecompositions, edge toggling.
//! - [`models`]: seeded random-graph families and prior-set sampling.
//! - [`sensing`]: signal synthesis, Gaussian measurements, CV fold plans.
//! - [`solver`]: LASSO in an orthonormal basis, CV error routines, and a
//!   graph total-variation variant.
//! - [`ges`]: greedy edge selection, brute-force graph selection, stopping
//!   rules, and sample-complexity bound calculators.
//! - [`perturb`]: first-order eigenvector perturbation approximation and its
//!   validity heuristic.
//! - [`recovery`]: the strategy registry mapping algorithm names to runnable
//!   recovery methods.
//! - [`ilecir`]: patch-wise compressive image recovery with inferred linear
//!   image edges.
//! - [`sweep`] / [`report`]: the seeded experiment harness.

pub mod error;
pub mod ges;
pub mod graph;
pub mod ilecir;
pub mod models;
pub mod perturb;
pub mod recovery;
pub mod report;
pub mod rng;
pub mod sensing;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use graph::{Graph, LaplacianMatrix, PerturbationSet, SpectralBasis};
