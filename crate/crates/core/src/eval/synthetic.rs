use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{Rating, SparseRatings};
use crate::gibbs::{dot, FactorMatrix};
use crate::samplers::{RngStream, StreamTag};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub ratings: SparseRatings,
    pub u: FactorMatrix,
    pub v: FactorMatrix,
}

/// Low-rank ratings `u·v + noise` on a random subset of cells.
///
/// Factor entries have variance `1/√K`, so `u·v` has unit variance whatever
/// the rank. Cells are sampled without replacement and listed in row-major
/// order; values are not clamped.
pub fn generate_synthetic(
    n_rows: usize,
    n_cols: usize,
    k: usize,
    noise_sd: f64,
    density: f64,
    seed: u64,
) -> Result<SyntheticData> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "density {density} outside (0, 1]"
        )));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise sd {noise_sd} must be non-negative"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let cells = n_rows * n_cols;
    let count = (density * cells as f64).round() as usize;
    if count == 0 {
        return Err(Error::InvalidArgument(format!(
            "density {density} selects no cells of a {n_rows}x{n_cols} matrix"
        )));
    }

    let sd = (k as f64).powf(-0.25);
    let mut factor_rng = RngStream::tagged(seed, StreamTag::Synthetic, &[0]);
    let mut factors = |n: usize| {
        let mut f = FactorMatrix::zeros(n, k);
        for x in f.as_mut_slice() {
            *x = sd * factor_rng.sample::<f64, _>(StandardNormal);
        }
        f
    };
    let u = factors(n_rows);
    let v = factors(n_cols);

    let mut cell_rng = RngStream::tagged(seed, StreamTag::Synthetic, &[1]);
    let mut chosen = index::sample(&mut cell_rng, cells, count).into_vec();
    chosen.sort_unstable();

    let mut noise_rng = RngStream::tagged(seed, StreamTag::Synthetic, &[2]);
    let entries = chosen
        .into_iter()
        .map(|c| {
            let (r, d) = (c / n_cols, c % n_cols);
            let noise: f64 = noise_rng.sample(StandardNormal);
            Rating::new(r, d, dot(u.row(r), v.row(d)) + noise_sd * noise)
        })
        .collect();
    let ratings = SparseRatings::new(n_rows, n_cols, entries, None)?;
    Ok(SyntheticData { ratings, u, v })
}
