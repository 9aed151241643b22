//! Full conditionals of the BMF Gibbs sampler.
//!
//! A row `x` with Gaussian prior `(P, h)` and ratings `r` against other-side
//! factors `v` has conditional precision `P + τ·Σ v·vᵀ` and shift
//! `h + τ·Σ r·v`. The shared prior of a hierarchical side has a
//! Normal-Wishart conditional given all of that side's rows.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{FactorMatrix, NormalWishartPrior};
use crate::posterior::NaturalGaussian;
use crate::samplers::{cholesky, sample_mvn, sample_mvn_factored, sample_wishart};
use crate::Result;

/// Natural parameters of a row's conditional.
pub fn row_conditional<'a>(
    prior_precision: &DMatrix<f64>,
    prior_shift: &DVector<f64>,
    tau: f64,
    ratings: impl IntoIterator<Item = (&'a [f64], f64)>,
) -> NaturalGaussian {
    let k = prior_shift.len();
    let mut precision = prior_precision.clone();
    let mut shift = prior_shift.clone();
    for (v, r) in ratings {
        for a in 0..k {
            let tv = tau * v[a];
            shift[a] += tv * r;
            for b in 0..=a {
                precision[(a, b)] += tv * v[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            precision[(b, a)] = precision[(a, b)];
        }
    }
    NaturalGaussian { precision, shift }
}

/// One draw from a row's conditional. With no ratings this is a draw from the
/// prior itself.
pub fn sample_row<'a, R: Rng + ?Sized>(
    prior_precision: &DMatrix<f64>,
    prior_shift: &DVector<f64>,
    tau: f64,
    ratings: impl IntoIterator<Item = (&'a [f64], f64)>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let cond = row_conditional(prior_precision, prior_shift, tau, ratings);
    let factor = cholesky(&cond.precision)?;
    let mean = factor.solve(&cond.shift);
    Ok(sample_mvn_factored(&mean, &factor, rng))
}

/// Mean and precision of a hierarchical side's shared Gaussian prior.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    pub mu: DVector<f64>,
    pub lambda: DMatrix<f64>,
}

impl HyperParams {
    /// The prior as natural parameters `(Λ, Λ·μ)`.
    pub fn as_natural(&self) -> NaturalGaussian {
        NaturalGaussian {
            precision: self.lambda.clone(),
            shift: &self.lambda * &self.mu,
        }
    }
}

/// Parameters of the Normal-Wishart conditional given `n` rows.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalWishartPosterior {
    pub mu: DVector<f64>,
    pub beta: f64,
    pub w: DMatrix<f64>,
    pub nu: f64,
}

pub fn normal_wishart_posterior(
    rows: &FactorMatrix,
    prior: &NormalWishartPrior,
) -> Result<NormalWishartPosterior> {
    let n = rows.rows();
    if n == 0 {
        return Ok(NormalWishartPosterior {
            mu: prior.mu0().clone(),
            beta: prior.beta0(),
            w: prior.w0().clone(),
            nu: prior.nu0(),
        });
    }
    let k = prior.dim();
    let nf = n as f64;
    let mut mean = DVector::<f64>::zeros(k);
    for x in rows.iter_rows() {
        for a in 0..k {
            mean[a] += x[a];
        }
    }
    mean /= nf;
    let mut scatter = DMatrix::<f64>::zeros(k, k);
    for x in rows.iter_rows() {
        for a in 0..k {
            let da = x[a] - mean[a];
            for b in 0..=a {
                scatter[(a, b)] += da * (x[b] - mean[b]);
            }
        }
    }
    let beta0 = prior.beta0();
    let diff = &mean - prior.mu0();
    let shrink = beta0 * nf / (beta0 + nf);
    let mut w_inv = prior.w0_inv().clone();
    for a in 0..k {
        for b in 0..=a {
            let v = w_inv[(a, b)] + scatter[(a, b)] + shrink * diff[a] * diff[b];
            w_inv[(a, b)] = v;
            w_inv[(b, a)] = v;
        }
    }
    Ok(NormalWishartPosterior {
        mu: (prior.mu0() * beta0 + &mean * nf) / (beta0 + nf),
        beta: beta0 + nf,
        w: cholesky(&w_inv)?.inverse(),
        nu: prior.nu0() + nf,
    })
}

/// `Λ ~ Wishart(W*, ν*)`, then `μ ~ N(μ*, (β*·Λ)⁻¹)`.
pub fn sample_hyperparams<R: Rng + ?Sized>(
    rows: &FactorMatrix,
    prior: &NormalWishartPrior,
    rng: &mut R,
) -> Result<HyperParams> {
    let post = normal_wishart_posterior(rows, prior)?;
    let lambda = sample_wishart(&post.w, post.nu, rng)?;
    let mu = sample_mvn(&post.mu, &(&lambda * post.beta), rng)?;
    Ok(HyperParams { mu, lambda })
}
