//! Simulation protocols: Nott-Kohn data, n* sweeps, split-half RMSE,
//! parsimony of the two baselines and BIC agreement as `n` grows.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PepError, Result};
use crate::kernel::{BaselineKind, PepOptions};
use crate::marginal::{bic_delta, jpep_bf_quadrature, EstimatorSettings, MarginalEvaluator};
use crate::rng;
use crate::sampler::{predict_rows, sample_model_posterior, sample_reference_posterior};
use crate::search::{enumerate_all, map_model, SearchResult};
use crate::stat::{build_design, gram_cholesky, ols, Dataset, ModelSpec};

pub const NOTT_KOHN_N: usize = 50;
pub const NOTT_KOHN_P: usize = 15;
/// Zero-based indices of the covariates with nonzero effect (X1, X5, X7, X11, X13).
pub const NOTT_KOHN_TRUE: [usize; 5] = [0, 4, 6, 10, 12];
pub const DEFAULT_PARTITIONS: usize = 50;
/// Fresh splits tried per partition before giving up.
pub const MAX_SPLIT_DRAWS: u64 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct NottKohnReplicate {
    pub dataset: Dataset,
    pub seed: u64,
    pub true_gamma: ModelSpec,
}

/// `X1..X10 ~ N(0, 1)`, `Xj ~ N(0.3X1 + 0.5X2 + 0.7X3 + 0.9X4 + 1.1X5, 1)` for
/// `j = 11..15`, `Y = 4 + 2X1 − X5 + 1.5X7 + X11 + 0.5X13 + N(0, 2.5²)`.
pub fn nott_kohn_generate(seed: u64) -> NottKohnReplicate {
    let mut rng = rng::stream(seed, "nott-kohn", &[]);
    let (n, p) = (NOTT_KOHN_N, NOTT_KOHN_P);
    let mut x = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        for j in 0..10 {
            x[(i, j)] = rng.sample(StandardNormal);
        }
        let m = 0.3 * x[(i, 0)] + 0.5 * x[(i, 1)] + 0.7 * x[(i, 2)] + 0.9 * x[(i, 3)] + 1.1 * x[(i, 4)];
        for j in 10..15 {
            x[(i, j)] = m + rng.sample::<f64, _>(StandardNormal);
        }
        let eps: f64 = rng.sample(StandardNormal);
        y[i] = 4.0 + 2.0 * x[(i, 0)] - x[(i, 4)] + 1.5 * x[(i, 6)] + x[(i, 10)] + 0.5 * x[(i, 12)] + 2.5 * eps;
    }
    let names = (1..=p).map(|j| format!("X{j}")).collect();
    NottKohnReplicate {
        dataset: Dataset::new(y, x, names).expect("generated data are finite"),
        seed,
        true_gamma: ModelSpec::from_indices(p, &NOTT_KOHN_TRUE).expect("indices in range"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub n_star: usize,
    pub inclusion: Vec<f64>,
}

/// Inclusion probabilities from full enumeration for each `n*` in `grid`.
/// Subsamples use a fresh training seed per grid point; `n* = n` uses `X* = X`.
pub fn nstar_sensitivity(
    dataset: &Dataset,
    options: &PepOptions,
    grid: &[usize],
    settings: EstimatorSettings,
    seed: u64,
) -> Result<Vec<SensitivityRow>> {
    grid.iter()
        .map(|&n_star| {
            let opts = options.with_n_star(n_star, rng::subseed(seed, "nstar-training", &[n_star as u64]));
            let cfg = opts.resolve(dataset.n(), dataset.p())?;
            let res = enumerate_all(&MarginalEvaluator::new(dataset, &cfg, settings)?)?;
            Ok(SensitivityRow {
                n_star,
                inclusion: res.inclusion,
            })
        })
        .collect()
}

/// Posterior used to predict the validation half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RmseMethod {
    /// PEP posterior with the given options resolved on the modeling half.
    Pep(PepOptions),
    /// Reference-prior posterior fitted directly to the modeling half.
    Reference,
}

impl RmseMethod {
    pub fn id(&self) -> String {
        match self {
            RmseMethod::Pep(o) => match o.baseline {
                BaselineKind::GPrior => "z-pep".into(),
                BaselineKind::Jeffreys => "j-pep".into(),
            },
            RmseMethod::Reference => "reference".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseReport {
    pub model: String,
    pub method: String,
    pub seed: u64,
    pub draws: usize,
    pub values: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

impl RmseReport {
    fn new(model: &ModelSpec, method: &RmseMethod, seed: u64, draws: usize, values: Vec<f64>) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            model: model.bit_string(),
            method: method.id(),
            seed,
            draws,
            values,
            mean,
            sd,
        }
    }

    /// One `partition,rmse` row per partition.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| PepError::InvalidData(e.to_string());
        w.write_record(["partition", "model", "method", "rmse"]).map_err(io)?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([k.to_string(), self.model.clone(), self.method.clone(), format!("{v:.16e}")])
                .map_err(io)?;
        }
        w.flush().map_err(|e| PepError::InvalidData(e.to_string()))
    }
}

/// `sqrt(mean_t mean_i (y_i − ŷ_i⁽ᵗ⁾)²)` over a validation set.
pub fn posterior_rmse(pred: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let t = pred.nrows() as f64;
    let nv = y.len() as f64;
    let mut ss = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        ss += pred.column(i).iter().map(|&f| (yi - f).powi(2)).sum::<f64>();
    }
    (ss / (t * nv)).sqrt()
}

/// Repeatedly splits the rows at random into a validation half of
/// `⌈n/2⌉` rows and a modeling half, fits `model` on the modeling half with
/// `t` posterior draws and records the validation RMSE. Splits whose
/// modeling half is rank deficient for the model are redrawn.
pub fn split_half_rmse(
    dataset: &Dataset,
    model: &ModelSpec,
    method: &RmseMethod,
    partitions: usize,
    t: usize,
    seed: u64,
) -> Result<RmseReport> {
    let n = dataset.n();
    if n < 4 {
        return Err(PepError::InvalidData(format!("split-half needs n ≥ 4, got {n}")));
    }
    if partitions == 0 {
        return Err(PepError::InvalidConfig("at least one partition required".into()));
    }
    let cols = model.included();
    let reduced = dataset.select_columns(&cols);
    let inner = ModelSpec::full(cols.len());
    let design = build_design(dataset, model)?;
    let n_v = n.div_ceil(2);
    let values = (0..partitions)
        .into_par_iter()
        .map(|k| {
            for attempt in 0..MAX_SPLIT_DRAWS {
                let mut rng = rng::stream(seed, "split-half", &[k as u64, attempt]);
                let mut rows: Vec<usize> = (0..n).collect();
                rows.shuffle(&mut rng);
                let (valid, fit) = rows.split_at(n_v);
                let xf = design.select_rows(fit);
                if fit.len() <= design.ncols() + 1 || gram_cholesky(&xf).is_err() {
                    continue;
                }
                let draws = match method {
                    RmseMethod::Pep(opts) => {
                        let half = reduced.select_rows(fit);
                        let cfg = opts.resolve(half.n(), half.p())?;
                        sample_model_posterior(&half, &inner, &cfg, t, &mut rng)?
                    }
                    RmseMethod::Reference => {
                        let yf = DVector::from_iterator(fit.len(), fit.iter().map(|&i| dataset.y()[i]));
                        sample_reference_posterior(&yf, &xf, t, &mut rng)?
                    }
                };
                let pred = predict_rows(&draws, &design.select_rows(valid))?;
                let yv = DVector::from_iterator(n_v, valid.iter().map(|&i| dataset.y()[i]));
                return Ok(posterior_rmse(&pred, &yv));
            }
            Err(PepError::RankDeficient(format!(
                "no full-rank modeling half for {model} in {MAX_SPLIT_DRAWS} draws"
            )))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RmseReport::new(model, method, seed, t, values))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsimonyRow {
    pub seed: u64,
    pub map_first: ModelSpec,
    pub map_second: ModelSpec,
    pub inclusion_first: Vec<f64>,
    pub inclusion_second: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsimonySummary {
    pub rows: Vec<ParsimonyRow>,
    /// Share of replicates with `dim(first MAP) ≤ dim(second MAP)`.
    pub fraction_not_larger: f64,
    pub mean_inclusion_first: Vec<f64>,
    pub mean_inclusion_second: Vec<f64>,
}

/// Enumerates every replicate under two configurations (typically J-PEP
/// first, Z-PEP second) and compares the MAP dimensions.
pub fn parsimony_comparison(
    replicates: &[NottKohnReplicate],
    first: &PepOptions,
    second: &PepOptions,
    settings: EstimatorSettings,
) -> Result<ParsimonySummary> {
    if replicates.is_empty() {
        return Err(PepError::InvalidConfig("no replicates".into()));
    }
    let run = |ds: &Dataset, opts: &PepOptions| -> Result<SearchResult> {
        let cfg = opts.resolve(ds.n(), ds.p())?;
        enumerate_all(&MarginalEvaluator::new(ds, &cfg, settings)?)
    };
    let rows = replicates
        .iter()
        .map(|r| {
            let a = run(&r.dataset, first)?;
            let b = run(&r.dataset, second)?;
            Ok(ParsimonyRow {
                seed: r.seed,
                map_first: map_model(&a),
                map_second: map_model(&b),
                inclusion_first: a.inclusion,
                inclusion_second: b.inclusion,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = rows.len() as f64;
    let p = rows[0].inclusion_first.len();
    let mean = |f: fn(&ParsimonyRow) -> &Vec<f64>| -> Vec<f64> {
        (0..p).map(|j| rows.iter().map(|r| f(r)[j]).sum::<f64>() / k).collect()
    };
    let fraction = rows.iter().filter(|r| r.map_first.dim() <= r.map_second.dim()).count() as f64 / k;
    Ok(ParsimonySummary {
        mean_inclusion_first: mean(|r| &r.inclusion_first),
        mean_inclusion_second: mean(|r| &r.inclusion_second),
        fraction_not_larger: fraction,
        rows,
    })
}

/// Data-generating model `y = β0 + β1 x + σ ε` with `x, ε ~ N(0, 1)` used by
/// [`consistency_curve`]; the comparison is `{x}` against the constant model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyDesign {
    pub beta0: f64,
    pub beta1: f64,
    pub sigma: f64,
    pub replicates: usize,
}

impl Default for ConsistencyDesign {
    fn default() -> Self {
        Self {
            beta0: 1.0,
            beta1: 0.3,
            sigma: 1.0,
            replicates: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyRow {
    pub n: usize,
    /// Replicate mean of `|−2 log BF − ΔBIC|`.
    pub gap: f64,
    pub gap_se: f64,
    /// Replicate mean of `BIC_ℓ − BIC_0`.
    pub delta_bic: f64,
    /// Replicate mean of `log BF` of `{x}` against the constant model.
    pub log_bf: f64,
}

/// J-PEP Bayes factors (by quadrature) against BIC differences on fresh
/// data at each sample size in `n_grid`.
pub fn consistency_curve(n_grid: &[usize], design: &ConsistencyDesign, seed: u64) -> Result<Vec<ConsistencyRow>> {
    if design.replicates == 0 {
        return Err(PepError::InvalidConfig("at least one replicate required".into()));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PepError::InvalidConfig("n grid must increase".into()));
    }
    n_grid
        .iter()
        .map(|&n| {
            if n < 4 {
                return Err(PepError::InvalidConfig(format!("n = {n} too small")));
            }
            let draws = (0..design.replicates)
                .into_par_iter()
                .map(|r| {
                    let mut rng = rng::stream(seed, "consistency", &[n as u64, r as u64]);
                    let x = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let y = DVector::from_fn(n, |i, _| {
                        design.beta0 + design.beta1 * x[(i, 0)] + design.sigma * rng.sample::<f64, _>(StandardNormal)
                    });
                    let ds = Dataset::unnamed(y, x)?;
                    let rss1 = ols(ds.y(), &build_design(&ds, &ModelSpec::full(1))?)?.rss;
                    let rss0 = ols(ds.y(), &build_design(&ds, &ModelSpec::null(1))?)?.rss;
                    let lbf = jpep_bf_quadrature(rss1, rss0, 2, 1, n)?;
                    let dbic = bic_delta(rss1, 2, rss0, 1, n)?;
                    Ok(((-2.0 * lbf - dbic).abs(), dbic, lbf))
                })
                .collect::<Result<Vec<_>>>()?;
            let k = draws.len() as f64;
            let gap = draws.iter().map(|d| d.0).sum::<f64>() / k;
            let var = draws.iter().map(|d| (d.0 - gap).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
            Ok(ConsistencyRow {
                n,
                gap,
                gap_se: (var / k).sqrt(),
                delta_bic: draws.iter().map(|d| d.1).sum::<f64>() / k,
                log_bf: draws.iter().map(|d| d.2).sum::<f64>() / k,
            })
        })
        .collect()
}

/// Writes serializable rows as CSV with a header; vectors are flattened
/// into one column per element by the caller.
pub fn write_records<W: Write>(out: W, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| PepError::InvalidData(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.flush().map_err(|e| PepError::InvalidData(e.to_string()))
}

#[cfg(test)]
mod tests;
