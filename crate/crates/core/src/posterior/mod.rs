//! Gaussian row summaries and the algebra that propagates and recombines them.

mod checkpoint;
mod gaussian;
mod predict;

pub use checkpoint::{from_records, to_records, SummaryRecord};
pub use gaussian::{
    aggregate_natural, aggregate_row_posteriors, gaussian_divide, gaussian_multiply,
    summarize_rows, to_natural, CovarianceMode, GaussianRowSummary, NaturalGaussian, RowMoments,
};
pub use predict::{predict_cells, predict_from_summaries, CellPrediction, PredictionAccumulator};

/// Default relative ridge added to sampled covariances.
pub const DEFAULT_RIDGE_EPS: f64 = 1e-6;
/// First jitter tried when a quotient of Gaussians is not positive definite.
pub const DEFAULT_JITTER: f64 = 1e-8;
