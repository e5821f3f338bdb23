//! Variable selection for Gaussian linear regression under
//! power-expected-posterior (PEP) priors.

pub mod error;
pub mod experiments;
pub mod kernel;
pub mod marginal;
pub mod rng;
pub mod sampler;
pub mod search;
pub mod stat;

pub use error::{PepError, Result};
