use serde::{Deserialize, Serialize};

use crate::error::{PepError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Scheme1,
    Scheme2,
    Quadrature,
    ClosedForm,
    Bic,
}

/// A (possibly Monte-Carlo) log marginal likelihood.
///
/// The value is kept as `anchor + excess`: `anchor` is the closed-form part
/// shared by the estimator (for example the constant model's marginal) and
/// `excess` is the estimated log ratio. Bayes factors between estimates with
/// equal anchors use the excesses only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMarginalEstimate {
    pub log_value: f64,
    pub mc_se: f64,
    pub scheme: Scheme,
    pub iterations: usize,
    pub anchor: f64,
    pub excess: f64,
}

impl LogMarginalEstimate {
    pub fn exact(log_value: f64, scheme: Scheme) -> Self {
        Self {
            log_value,
            mc_se: 0.0,
            scheme,
            iterations: 0,
            anchor: log_value,
            excess: 0.0,
        }
    }

    pub fn from_parts(anchor: f64, excess: f64, mc_se: f64, scheme: Scheme, iterations: usize) -> Self {
        Self {
            log_value: anchor + excess,
            mc_se,
            scheme,
            iterations,
            anchor,
            excess,
        }
    }

    /// `log BF` of this model against `other`.
    pub fn log_bf(&self, other: &LogMarginalEstimate) -> f64 {
        if self.anchor == other.anchor {
            self.excess - other.excess
        } else {
            self.log_value - other.log_value
        }
    }

    /// Monte-Carlo standard error of `log_bf(other)` for independent estimates.
    pub fn log_bf_se(&self, other: &LogMarginalEstimate) -> f64 {
        self.mc_se.hypot(other.mc_se)
    }
}

/// Prior over the model space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelPrior {
    #[default]
    Uniform,
}

impl ModelPrior {
    /// Log prior weight up to an additive constant.
    pub fn log_weight(&self, _model: &crate::stat::ModelSpec) -> f64 {
        match self {
            ModelPrior::Uniform => 0.0,
        }
    }
}

/// Posterior probabilities of models with the given log marginals, under a
/// model prior that is uniform over the supplied set.
pub fn posterior_model_probs(log_marginals: &[f64], prior: ModelPrior) -> Result<Vec<f64>> {
    match prior {
        ModelPrior::Uniform => normalize_log_weights(log_marginals),
    }
}

pub(crate) fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    if log_w.iter().any(|v| v.is_nan()) {
        return Err(PepError::Domain("NaN log marginal".into()));
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(PepError::AllNegInf);
    }
    if max == f64::INFINITY {
        return Err(PepError::Domain("infinite log marginal".into()));
    }
    let w: Vec<f64> = log_w.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_model_has_probability_one() {
        assert_eq!(posterior_model_probs(&[-123.4], ModelPrior::Uniform).unwrap(), vec![1.0]);
    }

    #[test]
    fn equal_marginals_split_evenly() {
        assert_eq!(posterior_model_probs(&[-5.0, -5.0], ModelPrior::Uniform).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn ratio_of_probabilities_is_bayes_factor() {
        let bf: f64 = 0.0783 / 0.0636;
        let probs = posterior_model_probs(&[bf.ln(), 0.0, -1.0], ModelPrior::Uniform).unwrap();
        assert_relative_eq!(probs[0] / probs[1], bf, max_relative = 1e-12);
        assert_relative_eq!(probs[0] / probs[1], 1.23, epsilon = 0.005);
    }

    #[test]
    fn all_neg_inf_rejected() {
        assert_eq!(
            posterior_model_probs(&[f64::NEG_INFINITY; 3], ModelPrior::Uniform),
            Err(PepError::AllNegInf)
        );
    }

    #[test]
    fn bf_from_shared_anchor_uses_excess() {
        let a = LogMarginalEstimate::from_parts(1e6 + 0.1, 0.3, 0.01, Scheme::Scheme2, 10);
        let b = LogMarginalEstimate::from_parts(1e6 + 0.1, -0.2, 0.02, Scheme::Scheme2, 10);
        assert_eq!(a.log_bf(&b), 0.5);
        assert_relative_eq!(a.log_bf_se(&b), (0.0005f64).sqrt());
    }
}
