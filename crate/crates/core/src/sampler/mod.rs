//! Posterior draws of `(β, σ²)` under the PEP prior and linear predictions.

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{PepError, Result};
use crate::kernel::{training_rows, ModelKernel, PepConfig};
use crate::stat::{ols, Dataset, ModelSpec};

/// Smallest number of draws accepted by [`sample_posterior`].
pub const MIN_DRAWS: usize = 100;
/// Effective sample size below this fraction of `T` is an error.
pub const ESS_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    /// One draw per row.
    pub betas: DMatrix<f64>,
    pub sigma2s: DVector<f64>,
    /// Effective sample size of the importance stage.
    pub ess: f64,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.sigma2s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma2s.is_empty()
    }

    pub fn beta_mean(&self) -> DVector<f64> {
        self.betas.row_mean().transpose()
    }
}

/// Sampling-importance-resampling from the PEP posterior of the kernel's
/// model.
///
/// Training responses are proposed from `m_ℓ(y* | y)` and weighted by
/// `m_ℓ(y | y*) m₀(y*) / m_ℓ(y* | y)`, which is proportional to the mixing
/// measure of the posterior over `y*`. Resampled `y*` values then feed exact
/// normal-inverse-gamma draws.
pub fn sample_posterior<R: Rng + ?Sized>(
    kernel: &ModelKernel,
    null: &ModelKernel,
    t: usize,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    if t < MIN_DRAWS {
        return Err(PepError::InvalidConfig(format!("need at least {MIN_DRAWS} draws, got {t}")));
    }
    if !null.model().is_null() || null.n_star() != kernel.n_star() {
        return Err(PepError::InvalidConfig("reference kernel must be the matching constant model".into()));
    }
    let mut ws = kernel.workspace();
    let mut null_draw = null.empty_draw();
    let mut draws = Vec::with_capacity(t);
    let mut log_w = Vec::with_capacity(t);
    for _ in 0..t {
        let mut draw = kernel.empty_draw();
        kernel.sample_reduced_into(rng, &mut ws, &mut draw)?;
        if !kernel.model().is_null() {
            draw.to_null_into(&mut null_draw);
            log_w.push(
                kernel.log_conditional_marginal_with(&draw, &mut ws)?
                    + null.log_prior_predictive_kernel_reduced(&null_draw)?
                    - kernel.log_predictive_with(&draw, &mut ws)?,
            );
        }
        draws.push(draw);
    }
    let (weights, ess) = if kernel.model().is_null() {
        (vec![1.0; t], t as f64)
    } else {
        let w = crate::marginal::normalize_log_weights(&log_w)?;
        let ess = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
        (w, ess)
    };
    let floor = ESS_FLOOR * t as f64;
    if ess < floor {
        return Err(PepError::Degenerate { ess, floor });
    }
    let index = WeightedIndex::new(&weights).map_err(|e| PepError::Domain(e.to_string()))?;
    let d = kernel.dim();
    let mut betas = DMatrix::zeros(t, d);
    let mut sigma2s = DVector::zeros(t);
    for i in 0..t {
        let nig = kernel.conditional_posterior_reduced(&draws[index.sample(rng)])?;
        let (beta, sigma2) = nig.sample(rng);
        betas.row_mut(i).tr_copy_from(&beta);
        sigma2s[i] = sigma2;
    }
    Ok(PosteriorDraws { betas, sigma2s, ess })
}

/// Builds the kernels for `model` on `dataset` and samples its PEP posterior.
pub fn sample_model_posterior<R: Rng + ?Sized>(
    dataset: &Dataset,
    model: &ModelSpec,
    cfg: &PepConfig,
    t: usize,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    let rows = training_rows(dataset, cfg)?;
    let kernel = ModelKernel::new(dataset, model, cfg, &rows)?;
    let null = ModelKernel::new(dataset, &ModelSpec::null(dataset.p()), cfg, &rows)?;
    sample_posterior(&kernel, &null, t, rng)
}

/// Draws from the posterior under the reference prior `1/σ²` on the data
/// alone: `σ² ~ IG((n−d)/2, RSS/2)`, `β | σ² ~ N(β̂, σ²(XᵀX)⁻¹)`.
pub fn sample_reference_posterior<R: Rng + ?Sized>(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    t: usize,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    let fit = ols(y, x)?;
    let d = x.ncols();
    let gamma = Gamma::new(0.5 * (x.nrows() - d) as f64, 1.0).map_err(|e| PepError::Domain(e.to_string()))?;
    let lt = fit.xtx_chol.l().transpose();
    let mut betas = DMatrix::zeros(t, d);
    let mut sigma2s = DVector::zeros(t);
    for i in 0..t {
        let sigma2 = 0.5 * fit.rss / gamma.sample(rng);
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = lt
            .solve_upper_triangular(&z)
            .ok_or_else(|| PepError::NotPositiveDefinite("singular factor".into()))?;
        betas.row_mut(i).tr_copy_from(&(&fit.beta_hat + step * sigma2.sqrt()));
        sigma2s[i] = sigma2;
    }
    Ok(PosteriorDraws {
        betas,
        sigma2s,
        ess: t as f64,
    })
}

/// Linear predictions `Xnew β⁽ᵗ⁾`, one row per draw.
pub fn predict_rows(draws: &PosteriorDraws, xnew: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if xnew.ncols() != draws.betas.ncols() {
        return Err(PepError::DimensionMismatch(format!(
            "Xnew has {} columns, draws have {}",
            xnew.ncols(),
            draws.betas.ncols()
        )));
    }
    Ok(&draws.betas * xnew.transpose())
}
