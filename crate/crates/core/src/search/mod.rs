//! Exploration of the model space and posterior summaries.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PepError, Result};
use crate::kernel::PepConfig;
use crate::marginal::{
    normalize_log_weights, EstimatorSettings, LogMarginalEstimate, MarginalEvaluator, MarginalMethod, ModelPrior,
};
use crate::rng;
use crate::stat::{Dataset, ModelSpec};

/// Largest `p` accepted by [`enumerate_all`].
pub const MAX_ENUMERATE_P: usize = 25;
/// Default inclusion threshold of the two-step search.
pub const DEFAULT_THRESHOLD: f64 = 0.3;
/// Proposal used by [`mc3_search`]; recorded in outputs.
pub const MC3_PROPOSAL: &str = "single-flip uniform";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VisitedModel {
    pub model: ModelSpec,
    pub estimate: LogMarginalEstimate,
    pub visits: u64,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub proposed: usize,
    pub accepted: bool,
    pub current: ModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub p: usize,
    pub method: MarginalMethod,
    /// In order of first evaluation.
    pub visited: Vec<VisitedModel>,
    /// Posterior inclusion probability of each covariate.
    pub inclusion: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

impl SearchResult {
    fn from_estimates(
        p: usize,
        method: MarginalMethod,
        entries: Vec<(ModelSpec, LogMarginalEstimate, u64)>,
        trace: Vec<TraceEntry>,
        prior: ModelPrior,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(PepError::InvalidConfig("no models evaluated".into()));
        }
        let log_w: Vec<f64> = entries
            .iter()
            .map(|(m, e, _)| e.log_value + prior.log_weight(m))
            .collect();
        let probs = normalize_log_weights(&log_w)?;
        let mut inclusion = vec![0.0; p];
        for ((m, _, _), pr) in entries.iter().zip(&probs) {
            for j in m.included() {
                inclusion[j] += pr;
            }
        }
        let visited = entries
            .into_iter()
            .zip(probs)
            .map(|((model, estimate, visits), prob)| VisitedModel {
                model,
                estimate,
                visits,
                prob,
            })
            .collect();
        Ok(Self {
            p,
            method,
            visited,
            inclusion,
            trace,
        })
    }

    pub fn len(&self) -> usize {
        self.visited.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visited.is_empty()
    }

    pub fn get(&self, model: &ModelSpec) -> Option<&VisitedModel> {
        self.visited.iter().find(|v| &v.model == model)
    }

    /// Visited models by decreasing probability; ties go to the smaller
    /// model, then to the lexicographically smaller inclusion vector.
    pub fn ranked(&self) -> Vec<&VisitedModel> {
        let mut out: Vec<&VisitedModel> = self.visited.iter().collect();
        out.sort_by(|a, b| {
            b.prob
                .total_cmp(&a.prob)
                .then(a.model.dim().cmp(&b.model.dim()))
                .then(a.model.cmp(&b.model))
        });
        out
    }

    /// Probability map over the full space of `2^p` models (missing models
    /// get zero); intended for small `p`.
    pub fn prob_of(&self, model: &ModelSpec) -> f64 {
        self.get(model).map_or(0.0, |v| v.prob)
    }
}

/// Maximum a-posteriori model.
pub fn map_model(result: &SearchResult) -> ModelSpec {
    result.ranked()[0].model.clone()
}

/// Model with exactly the covariates whose inclusion probability exceeds 0.5.
pub fn median_probability_model(result: &SearchResult) -> ModelSpec {
    ModelSpec::new(result.inclusion.iter().map(|&q| q > 0.5).collect())
}

/// Evaluates all `2^p` models.
pub fn enumerate_all(evaluator: &MarginalEvaluator) -> Result<SearchResult> {
    let p = evaluator.dataset().p();
    if p > MAX_ENUMERATE_P {
        return Err(PepError::SpaceTooLarge(p));
    }
    let entries = (0..1u64 << p)
        .into_par_iter()
        .map(|bits| {
            let model = ModelSpec::from_bits(p, bits);
            evaluator.estimate(&model).map(|e| (model, e, 0))
        })
        .collect::<Result<Vec<_>>>()?;
    SearchResult::from_estimates(p, evaluator.method(), entries, Vec::new(), ModelPrior::Uniform)
}

/// Metropolis search over inclusion vectors started at the constant model.
///
/// Each step flips one uniformly chosen indicator and accepts with
/// probability `min(1, m(y | proposal) / m(y | current))`. Marginals are
/// estimated once per model and reused, and probabilities are the
/// renormalized marginal weights of the visited models.
pub fn mc3_search(evaluator: &MarginalEvaluator, iterations: usize, seed: u64) -> Result<SearchResult> {
    let p = evaluator.dataset().p();
    let mut chain = rng::stream(seed, "mc3", &[]);
    let mut index: HashMap<ModelSpec, usize> = HashMap::new();
    let mut entries: Vec<(ModelSpec, LogMarginalEstimate, u64)> = Vec::new();
    let mut lookup = |model: &ModelSpec, entries: &mut Vec<(ModelSpec, LogMarginalEstimate, u64)>| -> Result<usize> {
        if let Some(&i) = index.get(model) {
            return Ok(i);
        }
        let est = evaluator.estimate(model)?;
        entries.push((model.clone(), est, 0));
        index.insert(model.clone(), entries.len() - 1);
        Ok(entries.len() - 1)
    };
    let mut current = lookup(&ModelSpec::null(p), &mut entries)?;
    entries[current].2 += 1;
    let mut trace = Vec::with_capacity(iterations);
    if p > 0 {
        for it in 0..iterations {
            let j = chain.random_range(0..p);
            let proposal = entries[current].0.flipped(j);
            let next = lookup(&proposal, &mut entries)?;
            let delta = entries[next].1.log_value - entries[current].1.log_value;
            let accepted = delta >= 0.0 || chain.random::<f64>().ln() < delta;
            if accepted {
                current = next;
            }
            entries[current].2 += 1;
            trace.push(TraceEntry {
                iteration: it,
                proposed: j,
                accepted,
                current: entries[current].0.clone(),
            });
        }
    }
    SearchResult::from_estimates(p, evaluator.method(), entries, trace, ModelPrior::Uniform)
}

/// Result of the two-step search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStepResult {
    /// Covariates kept after the first step (full-space indices).
    pub kept: Vec<usize>,
    pub first: SearchResult,
    /// Second-step search, expressed in the full covariate space.
    pub second: SearchResult,
}

/// MC³ on the full space, then MC³ restricted to the covariates whose
/// inclusion probability exceeds `threshold` (all of them if `threshold ≤ 0`).
pub fn two_step_search(
    dataset: &Dataset,
    cfg: &PepConfig,
    settings: EstimatorSettings,
    iters1: usize,
    iters2: usize,
    threshold: f64,
    seed: u64,
) -> Result<TwoStepResult> {
    if !(threshold <= 1.0) {
        return Err(PepError::InvalidConfig(format!("threshold {threshold} above 1")));
    }
    let first = mc3_search(&MarginalEvaluator::new(dataset, cfg, settings)?, iters1, seed)?;
    let kept: Vec<usize> = (0..dataset.p())
        .filter(|&j| threshold <= 0.0 || first.inclusion[j] > threshold)
        .collect();
    if kept.is_empty() {
        return Err(PepError::EmptyReduction(threshold));
    }
    let reduced = dataset.select_columns(&kept);
    let step2_seed = rng::subseed(seed, "two-step", &[2]);
    let inner = mc3_search(&MarginalEvaluator::new(&reduced, cfg, settings)?, iters2, step2_seed)?;
    let p = dataset.p();
    let lift = |m: &ModelSpec| m.lift(&kept, p);
    let mut inclusion = vec![0.0; p];
    for (k, &j) in kept.iter().enumerate() {
        inclusion[j] = inner.inclusion[k];
    }
    let second = SearchResult {
        p,
        method: inner.method,
        visited: inner
            .visited
            .iter()
            .map(|v| VisitedModel {
                model: lift(&v.model),
                ..v.clone()
            })
            .collect(),
        inclusion,
        trace: inner
            .trace
            .iter()
            .map(|t| TraceEntry {
                iteration: t.iteration,
                proposed: kept[t.proposed],
                accepted: t.accepted,
                current: lift(&t.current),
            })
            .collect(),
    };
    Ok(TwoStepResult { kept, first, second })
}
