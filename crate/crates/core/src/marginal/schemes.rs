use rand::Rng;

use super::estimate::{LogMarginalEstimate, Scheme};
use crate::error::{PepError, Result};
use crate::kernel::{Baseline, ModelKernel};
use crate::stat::log_mean_exp_with_se;

fn check_pair(kernel: &ModelKernel, null: &ModelKernel, iterations: usize) -> Result<()> {
    if !null.model().is_null() {
        return Err(PepError::InvalidConfig("reference kernel must be the constant model".into()));
    }
    if kernel.n_star() != null.n_star() || kernel.n() != null.n() {
        return Err(PepError::DimensionMismatch("kernels built on different data".into()));
    }
    if iterations == 0 {
        return Err(PepError::InvalidConfig("at least one iteration required".into()));
    }
    Ok(())
}

/// Closed-form g-prior marginal `log m(y)` of the kernel's model.
pub fn gprior_marginal(kernel: &ModelKernel) -> Result<f64> {
    match kernel.config().baseline {
        Baseline::GPrior { .. } => kernel.log_baseline_marginal(),
        Baseline::Jeffreys => Err(PepError::WrongBaseline),
    }
}

/// Jeffreys-baseline marginal `log m(y)` including `log c`.
pub fn jeffreys_marginal(kernel: &ModelKernel) -> Result<f64> {
    match kernel.config().baseline {
        Baseline::Jeffreys => kernel.log_baseline_marginal(),
        Baseline::GPrior { .. } => Err(PepError::WrongBaseline),
    }
}

/// First Monte-Carlo scheme: the baseline marginal of the model times the
/// average of `m₀(y*) / m_ℓ(y*)` over `y* ~ m_ℓ(y* | y)`.
pub fn scheme1<R: Rng + ?Sized>(
    kernel: &ModelKernel,
    null: &ModelKernel,
    iterations: usize,
    rng: &mut R,
) -> Result<LogMarginalEstimate> {
    check_pair(kernel, null, iterations)?;
    let anchor = gprior_marginal(kernel)?;
    if kernel.model().is_null() {
        return Ok(LogMarginalEstimate::from_parts(anchor, 0.0, 0.0, Scheme::Scheme1, iterations));
    }
    let mut ws = kernel.workspace();
    let mut draw = kernel.empty_draw();
    let mut null_draw = null.empty_draw();
    let mut values = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        kernel.sample_reduced_into(rng, &mut ws, &mut draw)?;
        draw.to_null_into(&mut null_draw);
        values.push(null.log_prior_predictive_reduced(&null_draw)? - kernel.log_prior_predictive_reduced(&draw)?);
    }
    let (excess, se) = log_mean_exp_with_se(&values)?;
    Ok(LogMarginalEstimate::from_parts(anchor, excess, se, Scheme::Scheme1, iterations))
}

/// Second-scheme estimate of `log BF` against the constant model and its
/// standard error. Uses only conditional and posterior predictive densities,
/// so it is defined for improper baselines and formal hyper-parameters.
pub fn scheme2_log_bf<R: Rng + ?Sized>(
    kernel: &ModelKernel,
    null: &ModelKernel,
    iterations: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check_pair(kernel, null, iterations)?;
    if kernel.model().is_null() {
        return Ok((0.0, 0.0));
    }
    let mut ws = kernel.workspace();
    let mut ws0 = null.workspace();
    let mut draw = kernel.empty_draw();
    let mut null_draw = null.empty_draw();
    let mut values = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        kernel.sample_reduced_into(rng, &mut ws, &mut draw)?;
        draw.to_null_into(&mut null_draw);
        let v = kernel.log_conditional_marginal_with(&draw, &mut ws)?
            - null.log_conditional_marginal_with(&null_draw, &mut ws0)?
            + null.log_predictive_with(&null_draw, &mut ws0)?
            - kernel.log_predictive_with(&draw, &mut ws)?;
        values.push(v);
    }
    log_mean_exp_with_se(&values)
}

/// Second Monte-Carlo scheme: the constant model's baseline marginal times
/// the average ratio of conditional and posterior predictive densities.
pub fn scheme2<R: Rng + ?Sized>(
    kernel: &ModelKernel,
    null: &ModelKernel,
    iterations: usize,
    rng: &mut R,
) -> Result<LogMarginalEstimate> {
    check_pair(kernel, null, iterations)?;
    let anchor = null.log_baseline_marginal()?;
    let (excess, se) = scheme2_log_bf(kernel, null, iterations, rng)?;
    Ok(LogMarginalEstimate::from_parts(anchor, excess, se, Scheme::Scheme2, iterations))
}
