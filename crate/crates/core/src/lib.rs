//! Bayesian matrix factorization (BMF) trained by Gibbs sampling, scaled out
//! with posterior propagation over an `I × J` block grid.
//!
//! The ratings matrix is cut into blocks that are processed in three phases:
//!
//! * **(a)** block `(0, 0)` alone, with hierarchical Normal-Wishart priors;
//! * **(b)** the rest of row group 0 and column group 0, in parallel, each using
//!   the phase-(a) posterior of the shared side as its prior;
//! * **(c)** every remaining block, in parallel, with both priors taken from
//!   the phase-(b) blocks that share its row group and column group.
//!
//! Per-row posteriors are summarized as Gaussians and can be recombined into a
//! single posterior by multiplying natural parameters and dividing out the
//! priors that were counted more than once.
//!
//! Modules, bottom-up:
//!
//! * [`data`]: sparse ratings, loaders, train/test split, block grids.
//! * [`samplers`]: seeded random streams, Cholesky, MVN and Wishart draws.
//! * [`gibbs`]: the per-block Gibbs chain.
//! * [`posterior`]: Gaussian row summaries and the propagation algebra.
//! * [`scheduler`]: the phase plan and its two-level parallel execution.
//! * [`eval`]: RMSE, synthetic data, block-size sweeps and scaling benchmarks.

pub mod data;
pub mod error;
pub mod eval;
pub mod gibbs;
pub mod posterior;
pub mod samplers;
pub mod scheduler;

pub use error::{Error, Result};
