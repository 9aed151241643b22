use rand::seq::index;

use super::SparseRatings;
use crate::samplers::{RngStream, StreamTag};
use crate::{Error, Result};

/// Holds out `round(test_fraction · n)` entries chosen by the seeded stream.
/// Both halves keep the input's dimensions, scale and relative entry order.
pub fn train_test_split(
    data: &SparseRatings,
    test_fraction: f64,
    seed: u64,
) -> Result<(SparseRatings, SparseRatings)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidData("cannot split an empty matrix".into()));
    }
    let n = data.len();
    let n_test = (test_fraction * n as f64).round() as usize;
    let mut rng = RngStream::tagged(seed, StreamTag::TrainTestSplit, &[]);
    let mut is_test = vec![false; n];
    for k in index::sample(&mut rng, n, n_test) {
        is_test[k] = true;
    }
    let (test, train): (Vec<_>, Vec<_>) =
        data.entries().iter().zip(&is_test).partition(|(_, &t)| t);
    let build = |part: Vec<(&super::Rating, &bool)>| {
        SparseRatings::from_parts_unchecked(
            data.n_rows(),
            data.n_cols(),
            part.into_iter().map(|(r, _)| *r).collect(),
            data.scale(),
        )
    };
    Ok((build(train), build(test)))
}
