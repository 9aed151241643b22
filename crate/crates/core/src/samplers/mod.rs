//! Seeded random streams and the distribution samplers behind the Gibbs core.

mod dist;
mod linalg;
mod rng;

pub use dist::{
    sample_mvn, sample_mvn_factored, sample_mvn_natural, sample_wishart, standard_normal_vector,
};
pub use linalg::{cholesky, is_positive_definite, max_abs, symmetrize, CholeskyFactor, SpdMatrix};
pub use rng::{derive_stream, RngStream, StreamTag};
