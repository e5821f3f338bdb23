use serde::{Deserialize, Serialize};

use crate::error::{PepError, Result};

/// Within-model baseline prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    /// Independence Jeffreys prior `c / σ²` (J-PEP).
    Jeffreys,
    /// Zellner g-prior `β | σ² ~ N(0, g (X*ᵀX*)⁻¹ σ²)`, `σ² ~ IG(a, b)` (Z-PEP).
    GPrior { g: f64, a: f64, b: f64 },
}

impl Baseline {
    pub fn kind(&self) -> BaselineKind {
        match self {
            Baseline::Jeffreys => BaselineKind::Jeffreys,
            Baseline::GPrior { .. } => BaselineKind::GPrior,
        }
    }

    /// True for g-prior hyper-parameters that do not define a proper prior
    /// (`a ≤ 0` or `b ≤ 0`), such as the limiting values `a = -d/2, b = 0`.
    pub fn is_formal(&self) -> bool {
        match *self {
            Baseline::Jeffreys => false,
            Baseline::GPrior { a, b, .. } => !(a > 0.0 && b > 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Jeffreys,
    GPrior,
}

/// How the imaginary design `X*` is taken from `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum TrainingPolicy {
    /// `X* = X` (requires `n* = n`).
    FullData,
    /// Random subsample of `n*` rows keyed by `seed`.
    Subsample { seed: u64 },
}

/// Fully resolved PEP configuration for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PepConfig {
    pub baseline: Baseline,
    /// Power applied to the imaginary-data likelihood (`1/δ`).
    pub delta: f64,
    pub n_star: usize,
    pub training: TrainingPolicy,
    /// `log c` of the Jeffreys baseline; it cancels from every Bayes factor.
    #[serde(default)]
    pub log_c: f64,
}

impl PepConfig {
    /// J-PEP with `n* = δ = n` and `X* = X`.
    pub fn jeffreys(n: usize) -> Self {
        PepOptions::new(BaselineKind::Jeffreys).resolve_unchecked(n)
    }

    /// Z-PEP with `n* = δ = n`, `g = δ n*`, `a = b = 0.01` and `X* = X`.
    pub fn zellner(n: usize) -> Self {
        PepOptions::new(BaselineKind::GPrior).resolve_unchecked(n)
    }

    /// Shrinkage weight `w = g / (g + δ)`.
    pub fn shrinkage_weight(&self) -> Result<f64> {
        match self.baseline {
            Baseline::GPrior { g, .. } => Ok(g / (g + self.delta)),
            Baseline::Jeffreys => Err(PepError::WrongBaseline),
        }
    }

    /// Same configuration with limiting g-prior hyper-parameters
    /// `(g, a = -d/2, b = 0)` under which Z-PEP coincides with J-PEP.
    pub fn limiting_gprior(&self, g: f64, d: usize) -> Self {
        Self {
            baseline: Baseline::GPrior {
                g,
                a: -(d as f64) / 2.0,
                b: 0.0,
            },
            ..*self
        }
    }

    /// Checks the configuration against a dataset with `n` rows and `p`
    /// candidate covariates.
    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.n_star < p + 2 || self.n_star > n {
            return Err(PepError::InvalidConfig(format!(
                "n* = {} outside [{}, {}]",
                self.n_star,
                p + 2,
                n
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(PepError::InvalidConfig(format!("delta = {} must be positive", self.delta)));
        }
        if let TrainingPolicy::FullData = self.training {
            if self.n_star != n {
                return Err(PepError::InvalidConfig(format!(
                    "full-data training needs n* = n, got n* = {} and n = {n}",
                    self.n_star
                )));
            }
        }
        if let Baseline::GPrior { g, a, b } = self.baseline {
            if !(g > 0.0 && g.is_finite()) {
                return Err(PepError::InvalidConfig(format!("g = {g} must be positive")));
            }
            if !a.is_finite() || !b.is_finite() || b < 0.0 {
                return Err(PepError::InvalidConfig(format!("invalid inverse-gamma (a, b) = ({a}, {b})")));
            }
        }
        if !self.log_c.is_finite() {
            return Err(PepError::InvalidConfig("log c must be finite".into()));
        }
        Ok(())
    }
}

/// Configuration template whose unset fields follow the default rules
/// `n* = n`, `δ = n*`, `g = δ n*`, `a = b = 0.01` once the sample size is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PepOptions {
    pub baseline: BaselineKind,
    pub n_star: Option<usize>,
    pub delta: Option<f64>,
    pub g: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// Seed of the row subsample when `n* < n`.
    pub training_seed: u64,
}

impl PepOptions {
    pub fn new(baseline: BaselineKind) -> Self {
        Self {
            baseline,
            n_star: None,
            delta: None,
            g: None,
            a: None,
            b: None,
            training_seed: 0,
        }
    }

    pub fn with_n_star(mut self, n_star: usize, training_seed: u64) -> Self {
        self.n_star = Some(n_star);
        self.training_seed = training_seed;
        self
    }

    fn resolve_unchecked(&self, n: usize) -> PepConfig {
        let n_star = self.n_star.unwrap_or(n);
        let delta = self.delta.unwrap_or(n_star as f64);
        let baseline = match self.baseline {
            BaselineKind::Jeffreys => Baseline::Jeffreys,
            BaselineKind::GPrior => Baseline::GPrior {
                g: self.g.unwrap_or(delta * n_star as f64),
                a: self.a.unwrap_or(0.01),
                b: self.b.unwrap_or(0.01),
            },
        };
        let training = if n_star == n {
            TrainingPolicy::FullData
        } else {
            TrainingPolicy::Subsample {
                seed: self.training_seed,
            }
        };
        PepConfig {
            baseline,
            delta,
            n_star,
            training,
            log_c: 0.0,
        }
    }

    /// Resolves the defaults for a dataset of `n` rows and `p` candidates.
    pub fn resolve(&self, n: usize, p: usize) -> Result<PepConfig> {
        let cfg = self.resolve_unchecked(n);
        cfg.validate(n, p)?;
        Ok(cfg)
    }
}
