//! Property tests for the invariants of the numerical core.

use nalgebra::{DMatrix, DVector};
use pep_core::experiments::posterior_rmse;
use pep_core::kernel::{training_rows, BaselineKind, ModelKernel, PepConfig, PepOptions};
use pep_core::marginal::{posterior_model_probs, scheme2_log_bf, ModelPrior};
use pep_core::rng;
use pep_core::stat::{cholesky, log_mvstudent, logsumexp, ols, Dataset, ModelSpec};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

fn normal_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut r = rng::stream(seed, "property-data", &[n as u64, p as u64]);
    let x = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |i, _| {
        1.0 + (0..p).map(|j| 0.5 * x[(i, j)]).sum::<f64>() + r.sample::<f64, _>(StandardNormal)
    });
    Dataset::unnamed(y, x).unwrap()
}

fn normal_vector(len: usize, seed: u64, tag: &str) -> DVector<f64> {
    let mut r = rng::stream(seed, tag, &[len as u64]);
    DVector::from_fn(len, |_, _| r.sample::<f64, _>(StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_probs_shift_invariant(
        logs in prop::collection::vec(-50.0f64..50.0, 1..40),
        shift in -1e3f64..1e3,
    ) {
        let a = posterior_model_probs(&logs, ModelPrior::Uniform).unwrap();
        let shifted: Vec<f64> = logs.iter().map(|v| v + shift).collect();
        let b = posterior_model_probs(&shifted, ModelPrior::Uniform).unwrap();
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*x >= 0.0);
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn logsumexp_shift(
        logs in prop::collection::vec(-300.0f64..300.0, 1..30),
        shift in -1e3f64..1e3,
    ) {
        let shifted: Vec<f64> = logs.iter().map(|v| v + shift).collect();
        let a = logsumexp(&logs).unwrap() + shift;
        let b = logsumexp(&shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn model_bits_round_trip(p in 0usize..20, bits in any::<u64>()) {
        let bits = if p == 0 { 0 } else { bits & ((1u64 << p) - 1) };
        let m = ModelSpec::from_bits(p, bits);
        prop_assert_eq!(m.dim(), 1 + bits.count_ones() as usize);
        prop_assert_eq!(ModelSpec::parse_bits(&m.bit_string()).unwrap(), m.clone());
        prop_assert_eq!(ModelSpec::from_indices(p, &m.included()).unwrap(), m);
    }

    #[test]
    fn ols_is_minimizer(seed in any::<u64>(), p in 1usize..5, coord in 0usize..5, up in any::<bool>()) {
        let ds = normal_dataset(20, p, seed);
        let x = pep_core::stat::build_design(&ds, &ModelSpec::full(p)).unwrap();
        let fit = ols(ds.y(), &x).unwrap();
        let mut b = fit.beta_hat.clone();
        b[coord % (p + 1)] += if up { 1e-4 } else { -1e-4 };
        let rss = (ds.y() - &x * b).norm_squared();
        prop_assert!(rss >= fit.rss - 1e-12);
        prop_assert!((fit.rss - (ds.y() - &x * &fit.beta_hat).norm_squared()).abs() < 1e-9);
    }

    #[test]
    fn mvstudent_location_scale(seed in any::<u64>(), n in 1usize..6, dof in 0.5f64..30.0, s in 0.1f64..10.0) {
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.3 });
        let mu = normal_vector(n, seed, "mu");
        let mu2 = normal_vector(n, seed, "mu2");
        let y = normal_vector(n, seed, "y");
        let scaled = cholesky(&(&a * (s * s))).unwrap();
        let base = cholesky(&a).unwrap();
        let lhs = log_mvstudent(&y, dof, &mu, &scaled).unwrap();
        let z = (&y - &mu) / s + &mu2;
        let rhs = log_mvstudent(&z, dof, &mu2, &base).unwrap() - n as f64 * s.ln();
        prop_assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn joint_symmetry_random(seed in any::<u64>(), p in 0usize..4, extra in 2usize..20, jeffreys in any::<bool>()) {
        let n = p + 4 + extra;
        let ds = normal_dataset(n, p, seed);
        let kind = if jeffreys { BaselineKind::Jeffreys } else { BaselineKind::GPrior };
        let cfg = PepOptions::new(kind).resolve(n, p).unwrap();
        let rows = training_rows(&ds, &cfg).unwrap();
        let k = ModelKernel::new(&ds, &ModelSpec::full(p), &cfg, &rows).unwrap();
        let joint = |ys: &DVector<f64>| {
            k.log_conditional_marginal(ys).unwrap() + k.log_prior_predictive(ys).unwrap()
                - k.log_predictive_ystar(ys).unwrap()
        };
        let y1 = normal_vector(cfg.n_star, seed, "ystar-1") * 2.0;
        let y2 = normal_vector(cfg.n_star, seed, "ystar-2") * 2.0;
        let reference = if jeffreys { joint(&y2) } else { k.log_baseline_marginal().unwrap() };
        prop_assert!((joint(&y1) - reference).abs() < 1e-8);
    }

    #[test]
    fn training_row_permutation(seed in any::<u64>(), p in 0usize..4, jeffreys in any::<bool>()) {
        let n = 25;
        let ds = normal_dataset(n, p, seed);
        let kind = if jeffreys { BaselineKind::Jeffreys } else { BaselineKind::GPrior };
        let cfg = PepOptions::new(kind).with_n_star(p + 8, seed).resolve(n, p).unwrap();
        let rows = training_rows(&ds, &cfg).unwrap();
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        perm.shuffle(&mut rng::stream(seed, "perm", &[]));
        let permuted: Vec<usize> = perm.iter().map(|&i| rows[i]).collect();
        let model = ModelSpec::full(p);
        let k1 = ModelKernel::new(&ds, &model, &cfg, &rows).unwrap();
        let k2 = ModelKernel::new(&ds, &model, &cfg, &permuted).unwrap();
        let ys = normal_vector(rows.len(), seed, "ystar");
        let ys2 = DVector::from_fn(rows.len(), |i, _| ys[perm[i]]);
        let pairs = [
            (k1.log_conditional_marginal(&ys).unwrap(), k2.log_conditional_marginal(&ys2).unwrap()),
            (k1.log_prior_predictive(&ys).unwrap(), k2.log_prior_predictive(&ys2).unwrap()),
            (k1.log_predictive_ystar(&ys).unwrap(), k2.log_predictive_ystar(&ys2).unwrap()),
        ];
        for (a, b) in pairs {
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn scheme2_ignores_log_c(seed in any::<u64>(), log_c in -50.0f64..50.0) {
        let ds = normal_dataset(15, 2, seed);
        let cfg = PepConfig::jeffreys(15);
        let shifted = PepConfig { log_c, ..cfg };
        let rows = training_rows(&ds, &cfg).unwrap();
        let bf = |c: &PepConfig| {
            let k = ModelKernel::new(&ds, &ModelSpec::full(2), c, &rows).unwrap();
            let k0 = ModelKernel::new(&ds, &ModelSpec::null(2), c, &rows).unwrap();
            scheme2_log_bf(&k, &k0, 200, &mut rng::stream(seed, "bf", &[])).unwrap()
        };
        let (a, b) = (bf(&cfg), bf(&shifted));
        prop_assert_eq!(a.0.to_bits(), b.0.to_bits());
        prop_assert_eq!(a.1.to_bits(), b.1.to_bits());
    }

    #[test]
    fn rmse_row_permutation(seed in any::<u64>(), t in 1usize..20, nv in 1usize..30) {
        let mut r = rng::stream(seed, "rmse", &[]);
        let pred = DMatrix::from_fn(t, nv, |_, _| r.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(nv, |_, _| r.sample::<f64, _>(StandardNormal));
        let mut perm: Vec<usize> = (0..nv).collect();
        perm.shuffle(&mut r);
        let pred2 = DMatrix::from_fn(t, nv, |i, j| pred[(i, perm[j])]);
        let y2 = DVector::from_fn(nv, |j, _| y[perm[j]]);
        let a = posterior_rmse(&pred, &y);
        let b = posterior_rmse(&pred2, &y2);
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-12 * a.max(1.0));
    }
}
