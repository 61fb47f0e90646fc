//! Bayes-optimal inference for the contextual stochastic block model (CSBM).
//!
//! The CSBM couples a sparse two-group (or `r`-group) stochastic block model
//! with high-dimensional Gaussian-mixture node features whose cluster labels
//! coincide with the communities. This crate provides:
//!
//! - [`model`] — model parameters, seeded instance generation, semi-supervised
//!   priors (including noisy labels), detectability threshold and the
//!   `(phi, eps)` parameterization.
//! - [`amp_bp`] — the AMP-BP solver for the binary balanced model: AMP on the
//!   feature side, BP on the sparse graph side, coupled through per-node
//!   fields. `O(NP)` time and memory per iteration.
//! - [`multi`] — the multi-community variant with a general symmetric affinity
//!   matrix, unbalanced group priors and matrix-valued Onsager terms.
//! - [`dense`] — the dense-limit AMP-AMP solver on the rank-one transformed
//!   adjacency matrix, and the scalar state-evolution recursion predicting it.
//! - [`free_energy`] — Bethe free entropy at a fixed point, its parameter
//!   gradient, and expectation-maximization estimation of `(c_in, c_out, mu)`.
//! - [`oracles`] — independent verification baselines: exact enumeration of
//!   posterior marginals at small `N`, Metropolis-within-Gibbs sampling, and
//!   an L2-regularized logistic-regression baseline.
//! - [`cli`] — deterministic seeded parameter sweeps with CSV output, backing
//!   the `csbm` binary.
//!
//! Every sampling and solver entry point is deterministic given its seed; see
//! [`rng`] for the stream-derivation scheme.
//!
//! The `examples/` directory contains one runnable example per capability,
//! e.g. `cargo run --release --example infer`.

pub mod amp_bp;
pub mod cli;
pub mod dense;
pub mod error;
pub mod free_energy;
pub mod graph;
pub mod model;
pub mod multi;
pub mod oracles;
pub mod rng;
pub(crate) mod util;

pub use error::{Error, Result};
