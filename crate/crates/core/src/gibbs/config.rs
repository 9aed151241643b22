use nalgebra::{DMatrix, DVector};

use crate::posterior::{CovarianceMode, DEFAULT_JITTER, DEFAULT_RIDGE_EPS};
use crate::samplers::cholesky;
use crate::{Error, Result};

pub const DEFAULT_TAU: f64 = 1.5;
pub const DEFAULT_BURN_IN: usize = 50;
pub const DEFAULT_SAMPLES: usize = 150;

/// Normal-Wishart hyperprior `(μ₀, β₀, W₀, ν₀)` on the mean and precision of
/// a side's shared Gaussian prior.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalWishartPrior {
    mu0: DVector<f64>,
    beta0: f64,
    w0: DMatrix<f64>,
    w0_inv: DMatrix<f64>,
    nu0: f64,
}

impl NormalWishartPrior {
    pub fn new(mu0: DVector<f64>, beta0: f64, w0: DMatrix<f64>, nu0: f64) -> Result<Self> {
        let k = mu0.len();
        if w0.nrows() != k || w0.ncols() != k {
            return Err(Error::InvalidArgument(format!(
                "W0 is {}x{}, expected {k}x{k}",
                w0.nrows(),
                w0.ncols()
            )));
        }
        if !(beta0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta0 = {beta0} must be positive"
            )));
        }
        if !(nu0 >= k as f64) {
            return Err(Error::InvalidArgument(format!("nu0 = {nu0} below K = {k}")));
        }
        let w0_inv = cholesky(&w0)
            .map_err(|e| Error::InvalidArgument(format!("W0 not positive definite: {e}")))?
            .inverse();
        Ok(NormalWishartPrior {
            mu0,
            beta0,
            w0,
            w0_inv,
            nu0,
        })
    }

    /// `μ₀ = 0, β₀ = 2, W₀ = I, ν₀ = K`.
    pub fn standard(k: usize) -> Self {
        Self::new(DVector::zeros(k), 2.0, DMatrix::identity(k, k), k as f64)
            .expect("standard hyperprior is valid")
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn w0(&self) -> &DMatrix<f64> {
        &self.w0
    }

    pub fn w0_inv(&self) -> &DMatrix<f64> {
        &self.w0_inv
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Latent dimension.
    pub k: usize,
    /// Residual noise precision of the Gaussian likelihood.
    pub tau: f64,
    pub burn_in: usize,
    /// Retained sweeps.
    pub samples: usize,
    pub hyperprior: NormalWishartPrior,
    pub ridge_eps: f64,
    pub jitter: f64,
    pub covariance: CovarianceMode,
}

impl ModelConfig {
    pub fn new(k: usize) -> Self {
        ModelConfig {
            k,
            tau: DEFAULT_TAU,
            burn_in: DEFAULT_BURN_IN,
            samples: DEFAULT_SAMPLES,
            hyperprior: NormalWishartPrior::standard(k),
            ridge_eps: DEFAULT_RIDGE_EPS,
            jitter: DEFAULT_JITTER,
            covariance: CovarianceMode::Full,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_sweeps(mut self, burn_in: usize, samples: usize) -> Self {
        self.burn_in = burn_in;
        self.samples = samples;
        self
    }

    pub fn total_sweeps(&self) -> usize {
        self.burn_in + self.samples
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad(format!("tau = {} must be positive", self.tau));
        }
        if self.samples == 0 {
            return bad("at least one retained sample is required".into());
        }
        if self.hyperprior.dim() != self.k {
            return bad(format!(
                "hyperprior has dimension {}, K = {}",
                self.hyperprior.dim(),
                self.k
            ));
        }
        if !(self.ridge_eps > 0.0) {
            return bad(format!("ridge_eps = {} must be positive", self.ridge_eps));
        }
        if !(self.jitter > 0.0) {
            return bad(format!("jitter = {} must be positive", self.jitter));
        }
        Ok(())
    }
}
