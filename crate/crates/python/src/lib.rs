//! Python module `pep_py`: datasets, configuration, marginal likelihoods,
//! model search and posterior sampling.

use nalgebra::{DMatrix, DVector};
use pep_core::experiments::nott_kohn_generate;
use pep_core::kernel::{BaselineKind, PepConfig, PepOptions};
use pep_core::marginal::{self, EstimatorSettings, MarginalEvaluator, MarginalMethod};
use pep_core::rng;
use pep_core::sampler::sample_model_posterior;
use pep_core::search::{self, SearchResult};
use pep_core::stat::{self, ModelSpec};
use pep_core::PepError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: PepError) -> PyErr {
    match e.root() {
        PepError::InvalidData(_)
        | PepError::DimensionMismatch(_)
        | PepError::InvalidConfig(_)
        | PepError::WrongBaseline
        | PepError::SpaceTooLarge(_)
        | PepError::EmptyReduction(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Response vector with named covariates (the intercept is implicit).
#[pyclass(module = "pep_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Dataset {
    inner: stat::Dataset,
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (y, x, names=None))]
    fn new(y: Vec<f64>, x: Vec<Vec<f64>>, names: Option<Vec<String>>) -> PyResult<Self> {
        let n = y.len();
        if x.len() != n {
            return Err(PyValueError::new_err(format!("x has {} rows, y has {n}", x.len())));
        }
        let p = x.first().map_or(0, Vec::len);
        if x.iter().any(|r| r.len() != p) {
            return Err(PyValueError::new_err("ragged covariate rows"));
        }
        let flat: Vec<f64> = x.into_iter().flatten().collect();
        let xm = DMatrix::from_row_slice(n, p, &flat);
        let names = names.unwrap_or_else(|| (1..=p).map(|j| format!("X{j}")).collect());
        let inner = stat::Dataset::new(DVector::from_vec(y), xm, names).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y().iter().copied().collect()
    }

    /// Covariates as a list of rows.
    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        let x = self.inner.x();
        (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect()
    }

    fn standardized(&self) -> Self {
        Self {
            inner: self.inner.standardized(),
        }
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

/// Prior and estimator settings. Unset prior fields follow the defaults
/// `n* = n`, `delta = n*`, `g = delta * n*`, `a = b = 0.01`.
#[pyclass(module = "pep_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Config {
    options: PepOptions,
    method: MarginalMethod,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    seed: u64,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (baseline="zpep", *, n_star=None, delta=None, g=None, a=None, b=None, training_seed=0, scheme="auto", iterations=1000, seed=0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        baseline: &str,
        n_star: Option<usize>,
        delta: Option<f64>,
        g: Option<f64>,
        a: Option<f64>,
        b: Option<f64>,
        training_seed: u64,
        scheme: &str,
        iterations: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let kind = match baseline {
            "zpep" | "gprior" => BaselineKind::GPrior,
            "jpep" | "jeffreys" => BaselineKind::Jeffreys,
            other => return Err(PyValueError::new_err(format!("unknown baseline {other:?}"))),
        };
        let method = match scheme {
            "auto" => MarginalMethod::Auto,
            "1" | "scheme1" => MarginalMethod::Scheme1,
            "2" | "scheme2" => MarginalMethod::Scheme2,
            "quadrature" => MarginalMethod::Quadrature,
            "closed-form" => MarginalMethod::ClosedForm,
            "bic" => MarginalMethod::Bic,
            other => return Err(PyValueError::new_err(format!("unknown scheme {other:?}"))),
        };
        Ok(Self {
            options: PepOptions {
                baseline: kind,
                n_star,
                delta,
                g,
                a,
                b,
                training_seed,
            },
            method,
            iterations,
            seed,
        })
    }

    #[getter]
    fn baseline(&self) -> &'static str {
        match self.options.baseline {
            BaselineKind::GPrior => "zpep",
            BaselineKind::Jeffreys => "jpep",
        }
    }

    /// Resolved `(n_star, delta, g)` for a dataset; `g` is `None` for jpep.
    fn resolve(&self, data: &Dataset) -> PyResult<(usize, f64, Option<f64>)> {
        let cfg = self.config(data)?;
        let g = match cfg.baseline {
            pep_core::kernel::Baseline::GPrior { g, .. } => Some(g),
            pep_core::kernel::Baseline::Jeffreys => None,
        };
        Ok((cfg.n_star, cfg.delta, g))
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(baseline={:?}, scheme={:?}, iterations={}, seed={})",
            self.baseline(),
            self.method,
            self.iterations,
            self.seed
        )
    }
}

impl Config {
    fn config(&self, data: &Dataset) -> PyResult<PepConfig> {
        self.options.resolve(data.inner.n(), data.inner.p()).map_err(to_py)
    }

    fn evaluator(&self, data: &Dataset) -> PyResult<MarginalEvaluator> {
        let st = EstimatorSettings::new(self.method, self.iterations, self.seed);
        MarginalEvaluator::new(&data.inner, &self.config(data)?, st).map_err(to_py)
    }
}

#[derive(FromPyObject)]
enum ModelArg {
    Text(String),
    Indices(Vec<usize>),
}

/// A 0/1 string, comma-separated names, or a list of zero-based indices.
fn parse_model(arg: ModelArg, data: &Dataset) -> PyResult<ModelSpec> {
    let p = data.inner.p();
    let idx = match arg {
        ModelArg::Indices(v) => v,
        ModelArg::Text(s) => {
            let s = s.trim();
            if s.is_empty() {
                Vec::new()
            } else if s.len() == p && s.chars().all(|c| c == '0' || c == '1') {
                return ModelSpec::parse_bits(s).map_err(to_py);
            } else {
                s.split(',')
                    .map(|name| {
                        data.inner
                            .names()
                            .iter()
                            .position(|n| n == name.trim())
                            .ok_or_else(|| PyValueError::new_err(format!("unknown covariate {name:?}")))
                    })
                    .collect::<PyResult<_>>()?
            }
        }
    };
    ModelSpec::from_indices(p, &idx).map_err(to_py)
}

/// Outcome of a model search.
#[pyclass(module = "pep_py", frozen)]
pub struct Selection {
    result: SearchResult,
    names: Vec<String>,
}

#[pymethods]
impl Selection {
    /// `(model bits, label, log marginal, mc_se, probability)` by decreasing probability.
    #[getter]
    fn models(&self) -> Vec<(String, String, f64, f64, f64)> {
        self.result
            .ranked()
            .into_iter()
            .map(|v| {
                (
                    v.model.bit_string(),
                    v.model.label(&self.names),
                    v.estimate.log_value,
                    v.estimate.mc_se,
                    v.prob,
                )
            })
            .collect()
    }

    #[getter]
    fn inclusion(&self) -> Vec<f64> {
        self.result.inclusion.clone()
    }

    #[getter]
    fn map_model(&self) -> String {
        search::map_model(&self.result).bit_string()
    }

    #[getter]
    fn median_probability_model(&self) -> String {
        search::median_probability_model(&self.result).bit_string()
    }

    fn __len__(&self) -> usize {
        self.result.len()
    }
}

/// Log marginal likelihood and its Monte-Carlo standard error.
#[pyfunction]
fn log_marginal(data: &Dataset, model: ModelArg, config: &Config) -> PyResult<(f64, f64)> {
    let m = parse_model(model, data)?;
    let est = config.evaluator(data)?.estimate(&m).map_err(to_py)?;
    Ok((est.log_value, est.mc_se))
}

/// Model search: `"enumerate"`, `"mc3"` or `"two-step"`.
#[pyfunction]
#[pyo3(signature = (data, config, search="enumerate", mc3_iterations=20000, threshold=0.3, chain_seed=0))]
fn select(
    py: Python<'_>,
    data: &Dataset,
    config: &Config,
    search: &str,
    mc3_iterations: usize,
    threshold: f64,
    chain_seed: u64,
) -> PyResult<Selection> {
    let names = data.inner.names().to_vec();
    let result = match search {
        "enumerate" => {
            let ev = config.evaluator(data)?;
            py.detach(|| search::enumerate_all(&ev)).map_err(to_py)?
        }
        "mc3" => {
            let ev = config.evaluator(data)?;
            py.detach(|| search::mc3_search(&ev, mc3_iterations, chain_seed)).map_err(to_py)?
        }
        "two-step" => {
            let cfg = config.config(data)?;
            let st = EstimatorSettings::new(config.method, config.iterations, config.seed);
            py.detach(|| {
                search::two_step_search(&data.inner, &cfg, st, mc3_iterations, mc3_iterations, threshold, chain_seed)
            })
            .map_err(to_py)?
            .second
        }
        other => return Err(PyValueError::new_err(format!("unknown search {other:?}"))),
    };
    Ok(Selection { result, names })
}

/// Posterior draws `(betas, sigma2s, ess)`; each beta row starts with the intercept.
#[pyfunction]
#[pyo3(signature = (data, model, config, draws=1000))]
fn sample_posterior(
    data: &Dataset,
    model: ModelArg,
    config: &Config,
    draws: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let m = parse_model(model, data)?;
    let cfg = config.config(data)?;
    let mut stream = rng::stream(config.seed, "py-sample", &[]);
    let out = sample_model_posterior(&data.inner, &m, &cfg, draws, &mut stream).map_err(to_py)?;
    let betas = (0..out.len()).map(|t| out.betas.row(t).iter().copied().collect()).collect();
    Ok((betas, out.sigma2s.iter().copied().collect(), out.ess))
}

/// Exact J-PEP `log BF` of a model against a nested one by quadrature.
#[pyfunction]
fn jpep_log_bf(rss_ell: f64, rss_0: f64, d_ell: usize, d_0: usize, n: usize) -> PyResult<f64> {
    marginal::jpep_bf_quadrature(rss_ell, rss_0, d_ell, d_0, n).map_err(to_py)
}

/// `BIC_ℓ − BIC_k`.
#[pyfunction]
fn bic_delta(rss_ell: f64, d_ell: usize, rss_k: f64, d_k: usize, n: usize) -> PyResult<f64> {
    marginal::bic_delta(rss_ell, d_ell, rss_k, d_k, n).map_err(to_py)
}

/// Synthetic Nott-Kohn dataset (n = 50, p = 15).
#[pyfunction]
fn nott_kohn(seed: u64) -> Dataset {
    Dataset {
        inner: nott_kohn_generate(seed).dataset,
    }
}

#[pymodule]
fn pep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Config>()?;
    m.add_class::<Selection>()?;
    m.add_function(wrap_pyfunction!(log_marginal, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(sample_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(jpep_log_bf, m)?)?;
    m.add_function(wrap_pyfunction!(bic_delta, m)?)?;
    m.add_function(wrap_pyfunction!(nott_kohn, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
