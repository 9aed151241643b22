use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::linalg::{cholesky, symmetrize, CholeskyFactor};
use crate::{Error, Result};

pub fn standard_normal_vector<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(k, |_, _| StandardNormal.sample(rng))
}

/// Draw from `N(mean, precision⁻¹)`. No inverse is formed: with
/// `precision = L·Lᵀ`, the draw is `mean + L⁻ᵀ·z`.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let factor = cholesky(precision)?;
    Ok(sample_mvn_factored(mean, &factor, rng))
}

/// Draw from the Gaussian with natural parameters `(precision, shift)`, i.e.
/// mean `precision⁻¹·shift`, reusing one factorization for mean and noise.
pub fn sample_mvn_natural<R: Rng + ?Sized>(
    shift: &DVector<f64>,
    precision: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let factor = cholesky(precision)?;
    let mean = factor.solve(shift);
    Ok(sample_mvn_factored(&mean, &factor, rng))
}

pub fn sample_mvn_factored<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision_factor: &CholeskyFactor,
    rng: &mut R,
) -> DVector<f64> {
    let z = standard_normal_vector(mean.len(), rng);
    mean + precision_factor.solve_upper(&z)
}

/// Wishart draw by Bartlett decomposition: with `scale = L·Lᵀ` and `A` lower
/// triangular, `A_ii = sqrt(χ²(dof − i))`, `A_ij ~ N(0, 1)` below the
/// diagonal, the draw is `L·A·Aᵀ·Lᵀ`.
pub fn sample_wishart<R: Rng + ?Sized>(
    scale: &DMatrix<f64>,
    dof: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = scale.nrows();
    if !(dof >= k as f64) {
        return Err(Error::InvalidArgument(format!(
            "Wishart degrees of freedom {dof} below dimension {k}"
        )));
    }
    let factor = cholesky(scale)?;
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let chi = ChiSquared::new(dof - i as f64)
            .map_err(|e| Error::InvalidArgument(format!("chi-squared: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = factor.l() * a;
    let mut out = &la * la.transpose();
    symmetrize(&mut out);
    Ok(out)
}
