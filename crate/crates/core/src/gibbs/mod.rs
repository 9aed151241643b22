//! Gibbs sampling for Bayesian matrix factorization on a single block.
//!
//! Ratings follow `r_nd ~ N(u_n·v_d, 1/τ)`. Each side's rows either share a
//! Gaussian prior with a Normal-Wishart hyperprior (hierarchical) or carry
//! their own fixed Gaussian prior propagated from an earlier block.

mod chain;
mod conditional;
mod config;
mod factors;

pub use chain::{
    gibbs_sweep, isotropic_prior, propagated_prior, run_chain, BlockPriors, ChainContext,
    ChainOutput, LatentBlockState, Side, SidePrior,
};
pub use conditional::{
    normal_wishart_posterior, row_conditional, sample_hyperparams, sample_row, HyperParams,
    NormalWishartPosterior,
};
pub use config::{ModelConfig, NormalWishartPrior, DEFAULT_BURN_IN, DEFAULT_SAMPLES, DEFAULT_TAU};
pub use factors::{dot, BlockAdjacency, FactorMatrix};
