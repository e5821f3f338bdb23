mod estimate;
mod evaluator;
mod quadrature;
mod schemes;

#[cfg(test)]
mod tests;

pub use estimate::{posterior_model_probs, LogMarginalEstimate, ModelPrior, Scheme};
pub use evaluator::{EstimatorSettings, MarginalEvaluator, MarginalMethod, DEFAULT_ITERATIONS};
pub use quadrature::{bic_delta, gauss_legendre, jpep_bf_quadrature, log_integrate, GL_NODES};
pub use schemes::{gprior_marginal, jeffreys_marginal, scheme1, scheme2, scheme2_log_bf};

pub(crate) use estimate::normalize_log_weights;
