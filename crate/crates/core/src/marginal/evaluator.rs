use serde::{Deserialize, Serialize};

use super::estimate::{LogMarginalEstimate, Scheme};
use super::quadrature::jpep_bf_quadrature;
use super::schemes::{scheme1, scheme2, scheme2_log_bf};
use crate::error::{PepError, Result};
use crate::kernel::{training_rows, Baseline, BaselineKind, ModelKernel, PepConfig, TrainingPolicy};
use crate::rng::{self, PepRng};
use crate::stat::{build_design, is_perfect_fit, ols, Dataset, ModelSpec};

/// Monte-Carlo iterations used unless overridden.
pub const DEFAULT_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalMethod {
    /// Scheme 1 for the g-prior baseline, scheme 2 for Jeffreys.
    Auto,
    Scheme1,
    Scheme2,
    Quadrature,
    /// Baseline (non-PEP) marginal in closed form.
    ClosedForm,
    Bic,
}

impl MarginalMethod {
    pub fn resolve(self, baseline: BaselineKind) -> MarginalMethod {
        match (self, baseline) {
            (MarginalMethod::Auto, BaselineKind::GPrior) => MarginalMethod::Scheme1,
            (MarginalMethod::Auto, BaselineKind::Jeffreys) => MarginalMethod::Scheme2,
            (m, _) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub method: MarginalMethod,
    pub iterations: usize,
    pub seed: u64,
}

impl EstimatorSettings {
    pub fn new(method: MarginalMethod, iterations: usize, seed: u64) -> Self {
        Self {
            method,
            iterations,
            seed,
        }
    }
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self::new(MarginalMethod::Auto, DEFAULT_ITERATIONS, 0)
    }
}

/// Estimates marginal likelihoods of models on one dataset under one
/// configuration. Every model draws from its own stream keyed by
/// `(seed, model)`, so estimates do not depend on evaluation order.
#[derive(Debug, Clone)]
pub struct MarginalEvaluator {
    dataset: Dataset,
    cfg: PepConfig,
    rows: Vec<usize>,
    null: ModelKernel,
    settings: EstimatorSettings,
    method: MarginalMethod,
}

impl MarginalEvaluator {
    pub fn new(dataset: &Dataset, cfg: &PepConfig, settings: EstimatorSettings) -> Result<Self> {
        cfg.validate(dataset.n(), dataset.p())?;
        let method = settings.method.resolve(cfg.baseline.kind());
        match method {
            MarginalMethod::Scheme1 | MarginalMethod::Scheme2 if settings.iterations == 0 => {
                return Err(PepError::InvalidConfig("at least one iteration required".into()));
            }
            MarginalMethod::Scheme1 if cfg.baseline.kind() != BaselineKind::GPrior => {
                return Err(PepError::WrongBaseline);
            }
            MarginalMethod::Quadrature => {
                if cfg.baseline != Baseline::Jeffreys {
                    return Err(PepError::WrongBaseline);
                }
                if cfg.training != TrainingPolicy::FullData || cfg.delta != dataset.n() as f64 {
                    return Err(PepError::InvalidConfig(
                        "quadrature Bayes factors need n* = delta = n".into(),
                    ));
                }
            }
            _ => {}
        }
        let rows = training_rows(dataset, cfg)?;
        let null = ModelKernel::new(dataset, &ModelSpec::null(dataset.p()), cfg, &rows)
            .map_err(|e| e.in_model("(constant)"))?;
        Ok(Self {
            dataset: dataset.clone(),
            cfg: *cfg,
            rows,
            null,
            settings,
            method,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn config(&self) -> &PepConfig {
        &self.cfg
    }

    pub fn settings(&self) -> &EstimatorSettings {
        &self.settings
    }

    /// Method actually used after resolving `Auto`.
    pub fn method(&self) -> MarginalMethod {
        self.method
    }

    pub fn training_rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn null_kernel(&self) -> &ModelKernel {
        &self.null
    }

    pub fn kernel(&self, model: &ModelSpec) -> Result<ModelKernel> {
        if model.is_null() && model.p() == self.dataset.p() {
            return Ok(self.null.clone());
        }
        ModelKernel::new(&self.dataset, model, &self.cfg, &self.rows)
    }

    /// Random stream of the Monte-Carlo estimate for `model`.
    pub fn stream(&self, model: &ModelSpec) -> PepRng {
        rng::stream(self.settings.seed, "marginal", &model.words())
    }

    pub fn estimate(&self, model: &ModelSpec) -> Result<LogMarginalEstimate> {
        self.estimate_inner(model)
            .map_err(|e| e.in_model(model.label(self.dataset.names())))
    }

    fn estimate_inner(&self, model: &ModelSpec) -> Result<LogMarginalEstimate> {
        let t = self.settings.iterations;
        match self.method {
            MarginalMethod::Scheme1 => scheme1(&self.kernel(model)?, &self.null, t, &mut self.stream(model)),
            MarginalMethod::Scheme2 => scheme2(&self.kernel(model)?, &self.null, t, &mut self.stream(model)),
            MarginalMethod::ClosedForm => Ok(LogMarginalEstimate::exact(
                self.kernel(model)?.log_baseline_marginal()?,
                Scheme::ClosedForm,
            )),
            MarginalMethod::Quadrature => {
                let anchor = self.null.log_baseline_marginal()?;
                if model.is_null() {
                    return Ok(LogMarginalEstimate::from_parts(anchor, 0.0, 0.0, Scheme::Quadrature, 0));
                }
                let (rss, d) = self.rss(model)?;
                let (rss0, _) = self.rss(&ModelSpec::null(self.dataset.p()))?;
                let lbf = jpep_bf_quadrature(rss, rss0, d, 1, self.dataset.n())?;
                Ok(LogMarginalEstimate::from_parts(anchor, lbf, 0.0, Scheme::Quadrature, 0))
            }
            MarginalMethod::Bic => {
                let (rss, d) = self.rss(model)?;
                let n = self.dataset.n() as f64;
                Ok(LogMarginalEstimate::exact(
                    -0.5 * (n * rss.ln() + d as f64 * n.ln()),
                    Scheme::Bic,
                ))
            }
            MarginalMethod::Auto => unreachable!("resolved at construction"),
        }
    }

    fn rss(&self, model: &ModelSpec) -> Result<(f64, usize)> {
        let x = build_design(&self.dataset, model)?;
        let fit = ols(self.dataset.y(), &x)?;
        if is_perfect_fit(fit.rss, self.dataset.y().norm_squared()) {
            return Err(PepError::DegenerateTraining(fit.rss));
        }
        Ok((fit.rss, x.ncols()))
    }

    /// Second-scheme `log BF` of `model` against the constant model.
    pub fn scheme2_log_bf(&self, model: &ModelSpec) -> Result<(f64, f64)> {
        scheme2_log_bf(
            &self.kernel(model)?,
            &self.null,
            self.settings.iterations,
            &mut self.stream(model),
        )
        .map_err(|e| e.in_model(model.label(self.dataset.names())))
    }
}
