//! Independent verification baselines.
//!
//! - [`exact_marginals`]: exact posterior marginals by enumeration of all
//!   `2^N` label configurations at small `N`, with the latent centroids
//!   integrated out in closed form.
//! - [`mcmc_marginals`]: Metropolis-within-Gibbs sampling of the joint
//!   posterior over labels and centroids.
//! - [`logistic_baseline`]: an L2-regularized logistic regression on the
//!   revealed nodes' features, ignoring the graph.

mod enumeration;
mod logistic;
mod mcmc;

pub use enumeration::{exact_marginals, MarginalTable, MAX_ENUMERATION_NODES};
pub use logistic::{logistic_baseline, DEFAULT_L2_GRID};
pub use mcmc::{mcmc_marginals, McmcOptions, McmcResult};
