//! Ratings data: loading, splitting and block partitioning.
//!
//! Everything here is immutable once built and can be shared freely between
//! worker threads.

mod grid;
mod io;
mod ratings;
mod split;

pub use grid::{
    block_aspect, build_grid, extract_block, partition_blocks, suggest_grid, AxisPartition, Block,
    BlockGrid, GridFile, PartitionStrategy,
};
pub use io::{
    load_csv_triplets, load_csv_triplets_with_dims, load_matrix_market, read_csv_triplets,
    read_matrix_market, write_csv_triplets, write_matrix_market, MATRIX_MARKET_HEADER,
};
pub use ratings::{compute_stats, DatasetStats, Rating, RatingScale, SparseRatings};
pub use split::train_test_split;
