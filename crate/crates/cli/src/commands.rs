use std::fs;
use std::path::Path;
use std::time::Instant;

use pep_core::experiments::{
    consistency_curve, nott_kohn_generate, nstar_sensitivity, split_half_rmse, ConsistencyDesign, RmseMethod,
};
use pep_core::kernel::{BaselineKind, PepConfig, PepOptions};
use pep_core::marginal::{EstimatorSettings, MarginalEvaluator, MarginalMethod};
use pep_core::rng;
use pep_core::sampler::sample_model_posterior;
use pep_core::search::{
    enumerate_all, map_model, mc3_search, median_probability_model, two_step_search, SearchResult, MC3_PROPOSAL,
};
use pep_core::stat::{Dataset, ModelSpec};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::io::{num, read_dataset, write_csv, write_dataset, write_json, Meta};
use crate::{
    BaselineArg, Cli, Command, ConsistencyArgs, DataArgs, EstimatorArgs, MarginalArgs, PriorArgs, RmseArgs,
    RmseMethodArg, SampleArgs, SchemeArg, SearchArg, SelectArgs, SensitivityArgs, SimKind, SimulateArgs,
};

/// Largest `p` enumerated by `--search auto`.
const AUTO_ENUMERATE_P: usize = 20;

pub fn run(cli: &Cli) -> CliResult<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Select(a) => select(a, seed),
        Command::Marginal(a) => marginal(a, seed),
        Command::Sample(a) => sample(a, seed),
        Command::Simulate(a) => simulate(a, seed),
        Command::Rmse(a) => rmse(a, seed),
        Command::Sensitivity(a) => sensitivity(a, seed),
        Command::Consistency(a) => consistency(a, seed),
    }
}

fn load(data: &DataArgs) -> CliResult<Dataset> {
    let ds = read_dataset(&data.input, &data.response, data.covariates.as_deref())?;
    Ok(if data.standardize { ds.standardized() } else { ds })
}

/// SHA-256 of the numeric content, so the config hash follows the data.
fn fingerprint(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    for v in ds.y().iter().chain(ds.x().iter()) {
        h.update(v.to_le_bytes());
    }
    for name in ds.names() {
        h.update(name.as_bytes());
        h.update([0]);
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn data_echo(data: &DataArgs, ds: &Dataset) -> Value {
    json!({
        "response": data.response,
        "covariates": ds.names(),
        "standardize": data.standardize,
        "n": ds.n(),
        "p": ds.p(),
        "fingerprint": fingerprint(ds),
    })
}

fn options(prior: &PriorArgs, seed: u64) -> PepOptions {
    PepOptions {
        baseline: match prior.baseline {
            BaselineArg::Zpep => BaselineKind::GPrior,
            BaselineArg::Jpep => BaselineKind::Jeffreys,
        },
        n_star: prior.n_star,
        delta: prior.delta,
        g: prior.g,
        a: prior.a,
        b: prior.b,
        training_seed: prior.training_seed.unwrap_or(seed),
    }
}

fn settings(est: &EstimatorArgs, seed: u64) -> EstimatorSettings {
    let method = match est.scheme {
        SchemeArg::Auto => MarginalMethod::Auto,
        SchemeArg::One => MarginalMethod::Scheme1,
        SchemeArg::Two => MarginalMethod::Scheme2,
        SchemeArg::Quadrature => MarginalMethod::Quadrature,
    };
    EstimatorSettings::new(method, est.iterations, seed)
}

/// Accepts a 0/1 string of length `p`, comma-separated covariate names, or
/// an empty string for the constant model.
fn parse_model(spec: &str, ds: &Dataset) -> CliResult<ModelSpec> {
    let spec = spec.trim();
    let p = ds.p();
    if spec.is_empty() || spec == "null" {
        return Ok(ModelSpec::null(p));
    }
    if spec.len() == p && spec.chars().all(|c| c == '0' || c == '1') {
        return ModelSpec::parse_bits(spec).map_err(|e| CliError::Config(e.to_string()));
    }
    let idx = spec
        .split(',')
        .map(|name| {
            let name = name.trim();
            ds.names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| CliError::Config(format!("unknown covariate {name:?} in model")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    ModelSpec::from_indices(p, &idx).map_err(|e| CliError::Config(e.to_string()))
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

fn model_json(res: &SearchResult, model: &ModelSpec, names: &[String]) -> Value {
    let hit = res.get(model);
    json!({
        "model": model.bit_string(),
        "label": model.label(names),
        "dim": model.dim(),
        "log_marginal": hit.map(|v| v.estimate.log_value),
        "mc_se": hit.map(|v| v.estimate.mc_se),
        "prob": res.prob_of(model),
    })
}

fn select(a: &SelectArgs, seed: u64) -> CliResult<()> {
    let start = Instant::now();
    let ds = load(&a.data)?;
    let opts = options(&a.prior, seed);
    let cfg = opts.resolve(ds.n(), ds.p())?;
    let st = settings(&a.estimator, seed);
    let search = match a.search {
        SearchArg::Auto if ds.p() <= AUTO_ENUMERATE_P => SearchArg::Enumerate,
        SearchArg::Auto => SearchArg::Mc3,
        s => s,
    };
    let iters2 = a.mc3_iterations2.unwrap_or(a.mc3_iterations);
    let chain_seed = rng::subseed(seed, "cli-mc3", &[]);
    let mut search_echo = json!({ "kind": format!("{search:?}").to_lowercase() });
    let (res, kept) = match search {
        SearchArg::Enumerate => (enumerate_all(&MarginalEvaluator::new(&ds, &cfg, st)?)?, None),
        SearchArg::Mc3 => {
            search_echo["iterations"] = json!(a.mc3_iterations);
            search_echo["proposal"] = json!(MC3_PROPOSAL);
            let ev = MarginalEvaluator::new(&ds, &cfg, st)?;
            (mc3_search(&ev, a.mc3_iterations, chain_seed)?, None)
        }
        SearchArg::TwoStep => {
            search_echo["iterations"] = json!([a.mc3_iterations, iters2]);
            search_echo["threshold"] = json!(a.threshold);
            search_echo["proposal"] = json!(MC3_PROPOSAL);
            let two = two_step_search(&ds, &cfg, st, a.mc3_iterations, iters2, a.threshold, chain_seed)?;
            (two.second, Some(two.kept))
        }
        SearchArg::Auto => unreachable!(),
    };
    let config = json!({
        "command": "select",
        "data": data_echo(&a.data, &ds),
        "pep": cfg,
        "estimator": { "method": st.method.resolve(cfg.baseline.kind()), "iterations": st.iterations },
        "search": search_echo,
    });
    let meta = Meta::new(seed, &config)?;
    prepare_out(&a.out)?;
    let names = ds.names();

    let ranked = res.ranked();
    let top_log = ranked[0].estimate.log_value;
    let rows: Vec<Vec<String>> = ranked
        .iter()
        .enumerate()
        .map(|(k, v)| {
            vec![
                (k + 1).to_string(),
                v.model.bit_string(),
                v.model.label(names),
                v.model.dim().to_string(),
                num(v.estimate.log_value),
                num(v.estimate.mc_se),
                num(v.prob),
                num((top_log - v.estimate.log_value).exp()),
                v.visits.to_string(),
            ]
        })
        .collect();
    let header = ["rank", "model", "label", "dim", "log_marginal", "mc_se", "prob", "bf_map_vs_model", "visits"]
        .map(String::from);
    write_csv(&a.out.join("models.csv"), &meta, &header, &rows)?;

    let inc_rows: Vec<Vec<String>> = res
        .inclusion
        .iter()
        .enumerate()
        .map(|(j, &q)| vec![j.to_string(), names[j].clone(), num(q)])
        .collect();
    write_csv(
        &a.out.join("inclusion.csv"),
        &meta,
        &["index", "covariate", "inclusion"].map(String::from),
        &inc_rows,
    )?;

    let map = map_model(&res);
    let mpm = median_probability_model(&res);
    let top: Vec<Value> = ranked.iter().take(a.top).map(|v| model_json(&res, &v.model, names)).collect();
    let summary = json!({
        "meta": meta,
        "config": config,
        "map_model": model_json(&res, &map, names),
        "median_probability_model": model_json(&res, &mpm, names),
        "top_models": top,
        "inclusion": names.iter().zip(&res.inclusion).map(|(n, q)| json!({"covariate": n, "inclusion": q})).collect::<Vec<_>>(),
        "kept_covariates": kept.map(|k| k.iter().map(|&j| names[j].clone()).collect::<Vec<_>>()),
        "timing": {
            "models_evaluated": res.len(),
            "elapsed_seconds": a.timing.then(|| start.elapsed().as_secs_f64()),
        },
    });
    write_json(&a.out.join("summary.json"), &summary)
}

fn marginal(a: &MarginalArgs, seed: u64) -> CliResult<()> {
    let ds = load(&a.data)?;
    let cfg = options(&a.prior, seed).resolve(ds.n(), ds.p())?;
    let st = settings(&a.estimator, seed);
    let ev = MarginalEvaluator::new(&ds, &cfg, st)?;
    let model = parse_model(&a.model, &ds)?;
    let est = ev.estimate(&model)?;
    let config = json!({
        "command": "marginal",
        "data": data_echo(&a.data, &ds),
        "pep": cfg,
        "estimator": { "method": ev.method(), "iterations": st.iterations },
        "model": model.bit_string(),
    });
    let out = json!({
        "meta": Meta::new(seed, &config)?,
        "config": config,
        "model": model.bit_string(),
        "label": model.label(ds.names()),
        "log_marginal": est.log_value,
        "mc_se": est.mc_se,
        "scheme": est.scheme,
        "iterations": est.iterations,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn sample(a: &SampleArgs, seed: u64) -> CliResult<()> {
    let ds = load(&a.data)?;
    let cfg: PepConfig = options(&a.prior, seed).resolve(ds.n(), ds.p())?;
    let model = parse_model(&a.model, &ds)?;
    let mut rng = rng::stream(seed, "cli-sample", &[]);
    let draws = sample_model_posterior(&ds, &model, &cfg, a.draws, &mut rng)
        .map_err(|e| CliError::from(e.in_model(model.label(ds.names()))))?;
    let config = json!({
        "command": "sample",
        "data": data_echo(&a.data, &ds),
        "pep": cfg,
        "model": model.bit_string(),
        "draws": a.draws,
    });
    let meta = Meta::new(seed, &config)?;
    prepare_out(&a.out)?;
    let mut header = vec!["draw".to_string(), "sigma2".to_string(), "intercept".to_string()];
    header.extend(model.included().iter().map(|&j| ds.names()[j].clone()));
    let rows: Vec<Vec<String>> = (0..draws.len())
        .map(|t| {
            let mut r = vec![t.to_string(), num(draws.sigma2s[t])];
            r.extend(draws.betas.row(t).iter().map(|&b| num(b)));
            r
        })
        .collect();
    write_csv(&a.out.join("draws.csv"), &meta, &header, &rows)?;
    let summary = json!({
        "meta": meta,
        "config": config,
        "label": model.label(ds.names()),
        "ess": draws.ess,
        "beta_mean": header[2..].iter().zip(draws.beta_mean().iter()).map(|(n, m)| json!({"term": n, "mean": m})).collect::<Vec<_>>(),
        "sigma2_mean": draws.sigma2s.mean(),
    });
    write_json(&a.out.join("sample.json"), &summary)
}

fn simulate(a: &SimulateArgs, seed: u64) -> CliResult<()> {
    match a.kind {
        SimKind::NottKohn => {
            let rep = nott_kohn_generate(seed);
            let meta = Meta::new(seed, &json!({ "command": "simulate", "kind": "nott-kohn" }))?;
            if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                prepare_out(dir)?;
            }
            write_dataset(&a.out, &rep.dataset, &meta)
        }
    }
}

fn rmse(a: &RmseArgs, seed: u64) -> CliResult<()> {
    let ds = load(&a.data)?;
    let model = parse_model(&a.model, &ds)?;
    let opts = options(&a.prior, seed);
    let method = match a.method {
        RmseMethodArg::Pep => RmseMethod::Pep(opts),
        RmseMethodArg::Reference => RmseMethod::Reference,
    };
    let rep = split_half_rmse(&ds, &model, &method, a.partitions, a.draws, seed)
        .map_err(|e| CliError::from(e.in_model(model.label(ds.names()))))?;
    let config = json!({
        "command": "rmse",
        "data": data_echo(&a.data, &ds),
        "method": method,
        "model": model.bit_string(),
        "partitions": a.partitions,
        "draws": a.draws,
    });
    let meta = Meta::new(seed, &config)?;
    prepare_out(&a.out)?;
    let rows: Vec<Vec<String>> = rep
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| vec![k.to_string(), rep.model.clone(), rep.method.clone(), num(v)])
        .collect();
    write_csv(
        &a.out.join("rmse.csv"),
        &meta,
        &["partition", "model", "method", "rmse"].map(String::from),
        &rows,
    )?;
    let summary = json!({
        "meta": meta,
        "config": config,
        "label": model.label(ds.names()),
        "mean": rep.mean,
        "sd": rep.sd,
    });
    write_json(&a.out.join("rmse.json"), &summary)
}

fn parse_grid(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Config(format!("invalid grid {s:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

fn sensitivity(a: &SensitivityArgs, seed: u64) -> CliResult<()> {
    let ds = load(&a.data)?;
    let opts = options(&a.prior, seed);
    let st = settings(&a.estimator, seed);
    let grid = parse_grid(&a.grid)?;
    let rows = nstar_sensitivity(&ds, &opts, &grid, st, seed)?;
    let config = json!({
        "command": "sensitivity",
        "data": data_echo(&a.data, &ds),
        "options": opts,
        "estimator": st,
        "grid": grid,
    });
    let meta = Meta::new(seed, &config)?;
    prepare_out(&a.out)?;
    let mut header = vec!["n_star".to_string()];
    header.extend(ds.names().iter().cloned());
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| std::iter::once(r.n_star.to_string()).chain(r.inclusion.iter().map(|&q| num(q))).collect())
        .collect();
    write_csv(&a.out.join("sensitivity.csv"), &meta, &header, &table)?;
    write_json(
        &a.out.join("sensitivity.json"),
        &json!({ "meta": meta, "config": config, "rows": rows }),
    )
}

fn consistency(a: &ConsistencyArgs, seed: u64) -> CliResult<()> {
    let design = ConsistencyDesign {
        beta0: a.beta0,
        beta1: a.beta1,
        sigma: a.sigma,
        replicates: a.replicates,
    };
    let rows = consistency_curve(&a.n_grid, &design, seed)?;
    let config = json!({ "command": "consistency", "design": design, "n_grid": a.n_grid });
    let meta = Meta::new(seed, &config)?;
    prepare_out(&a.out)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.n.to_string(), num(r.gap), num(r.gap_se), num(r.delta_bic), num(r.log_bf)])
        .collect();
    write_csv(
        &a.out.join("consistency.csv"),
        &meta,
        &["n", "gap", "gap_se", "delta_bic", "log_bf"].map(String::from),
        &table,
    )?;
    write_json(
        &a.out.join("consistency.json"),
        &json!({ "meta": meta, "config": config, "rows": rows }),
    )
}
