use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::PepError;
use crate::kernel::{Baseline, ModelKernel, PepConfig};
use crate::stat::{cholesky, log_mvstudent, Dataset, ModelSpec};

fn dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
    let y = DVector::from_fn(n, |i, _| 1.0 + 0.6 * x[(i, 0)] + rng.random_range(-1.5..1.5));
    Dataset::unnamed(y, x).unwrap()
}

fn settings(method: MarginalMethod, t: usize) -> EstimatorSettings {
    EstimatorSettings::new(method, t, 99)
}

#[test]
fn gprior_marginal_matches_dense_student_for_constant_model() {
    let ds = Dataset::unnamed(DVector::from_vec(vec![0.4, -1.2, 2.2, 0.9]), DMatrix::zeros(4, 0)).unwrap();
    let cfg = PepConfig::zellner(4);
    let k = ModelKernel::new(&ds, &ModelSpec::null(0), &cfg, &[0, 1, 2, 3]).unwrap();
    let (g, a, b) = (16.0, 0.01, 0.01);
    let ones = DMatrix::from_element(4, 4, 1.0);
    let scale = (DMatrix::identity(4, 4) + ones * (g / 4.0)) * (b / a);
    let dense = log_mvstudent(ds.y(), 2.0 * a, &DVector::zeros(4), &cholesky(&scale).unwrap()).unwrap();
    assert_relative_eq!(gprior_marginal(&k).unwrap(), dense, epsilon = 1e-9);
}

#[test]
fn zero_column_is_rejected_by_rank_check() {
    let mut ds = dataset(8, 2, 1);
    let mut x = ds.x().clone();
    x.column_mut(1).fill(0.0);
    ds = Dataset::unnamed(ds.y().clone(), x).unwrap();
    let cfg = PepConfig::zellner(8);
    let rows: Vec<usize> = (0..8).collect();
    let err = ModelKernel::new(&ds, &ModelSpec::full(2), &cfg, &rows).unwrap_err();
    assert!(matches!(err, PepError::RankDeficient(_)));
    let reduced = ModelKernel::new(&ds, &ModelSpec::parse_bits("10").unwrap(), &cfg, &rows).unwrap();
    assert!(gprior_marginal(&reduced).unwrap().is_finite());
}

#[test]
fn gprior_marginal_small_g_limit_and_monotone_grid() {
    // responses centered near zero: a wider prior only spreads mass away
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = DMatrix::from_fn(10, 1, |_, _| rng.random_range(-1.0..1.0));
    let y = DVector::from_fn(10, |_, _| rng.random_range(-0.05..0.05));
    let ds = Dataset::unnamed(y.clone(), x).unwrap();
    let rows: Vec<usize> = (0..10).collect();
    let value = |g: f64| {
        let cfg = PepConfig {
            baseline: Baseline::GPrior { g, a: 0.01, b: 0.01 },
            ..PepConfig::zellner(10)
        };
        gprior_marginal(&ModelKernel::new(&ds, &ModelSpec::full(1), &cfg, &rows).unwrap()).unwrap()
    };
    let grid: Vec<f64> = (0..12).map(|k| 10f64.powf(-6.0 + k as f64)).collect();
    let vals: Vec<f64> = grid.iter().map(|&g| value(g)).collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    let iid = log_mvstudent(&y, 0.02, &DVector::zeros(10), &cholesky(&DMatrix::identity(10, 10)).unwrap()).unwrap();
    assert!((value(1e-12) - iid).abs() < 1e-6);
}

#[test]
fn null_model_estimates_are_exact() {
    let ds = dataset(20, 3, 4);
    for (cfg, method) in [
        (PepConfig::zellner(20), MarginalMethod::Scheme1),
        (PepConfig::zellner(20), MarginalMethod::Scheme2),
        (PepConfig::jeffreys(20), MarginalMethod::Scheme2),
    ] {
        let ev = MarginalEvaluator::new(&ds, &cfg, settings(method, 500)).unwrap();
        let est = ev.estimate(&ModelSpec::null(3)).unwrap();
        assert_eq!(est.mc_se, 0.0);
        assert_eq!(est.log_value, ev.null_kernel().log_baseline_marginal().unwrap());
    }
}

#[test]
fn scheme1_requires_gprior() {
    let ds = dataset(20, 3, 5);
    assert_eq!(
        MarginalEvaluator::new(&ds, &PepConfig::jeffreys(20), settings(MarginalMethod::Scheme1, 10)).unwrap_err(),
        PepError::WrongBaseline
    );
}

#[test]
fn auto_routing() {
    let ds = dataset(20, 3, 6);
    let z = MarginalEvaluator::new(&ds, &PepConfig::zellner(20), settings(MarginalMethod::Auto, 10)).unwrap();
    let j = MarginalEvaluator::new(&ds, &PepConfig::jeffreys(20), settings(MarginalMethod::Auto, 10)).unwrap();
    assert_eq!(z.method(), MarginalMethod::Scheme1);
    assert_eq!(j.method(), MarginalMethod::Scheme2);
}

#[test]
fn schemes_agree_for_gprior() {
    let ds = dataset(30, 3, 7);
    let cfg = PepConfig::zellner(30);
    let m = ModelSpec::parse_bits("110").unwrap();
    let e1 = MarginalEvaluator::new(&ds, &cfg, EstimatorSettings::new(MarginalMethod::Scheme1, 10_000, 1))
        .unwrap()
        .estimate(&m)
        .unwrap();
    let e2 = MarginalEvaluator::new(&ds, &cfg, EstimatorSettings::new(MarginalMethod::Scheme2, 10_000, 2))
        .unwrap()
        .estimate(&m)
        .unwrap();
    assert!(e1.mc_se > 0.0 && e2.mc_se > 0.0);
    assert!((e1.log_value - e2.log_value).abs() <= 3.0 * e1.log_bf_se(&e2), "{e1:?} {e2:?}");
}

#[test]
fn estimates_are_deterministic_and_order_free() {
    let ds = dataset(25, 4, 8);
    let ev = MarginalEvaluator::new(&ds, &PepConfig::zellner(25), settings(MarginalMethod::Auto, 200)).unwrap();
    let a = ModelSpec::parse_bits("1010").unwrap();
    let b = ModelSpec::parse_bits("0111").unwrap();
    let first = (ev.estimate(&a).unwrap(), ev.estimate(&b).unwrap());
    let second = (ev.estimate(&b).unwrap(), ev.estimate(&a).unwrap());
    assert_eq!(first.0, second.1);
    assert_eq!(first.1, second.0);
}

#[test]
fn jeffreys_constant_cancels_bitwise() {
    let ds = dataset(25, 3, 9);
    let cfg = PepConfig::jeffreys(25);
    let shifted = PepConfig { log_c: 17.25, ..cfg };
    let s = settings(MarginalMethod::Scheme2, 300);
    let e1 = MarginalEvaluator::new(&ds, &cfg, s).unwrap();
    let e2 = MarginalEvaluator::new(&ds, &shifted, s).unwrap();
    let (m1, m2) = (ModelSpec::parse_bits("100").unwrap(), ModelSpec::parse_bits("111").unwrap());
    let bf1 = e1.estimate(&m1).unwrap().log_bf(&e1.estimate(&m2).unwrap());
    let bf2 = e2.estimate(&m1).unwrap().log_bf(&e2.estimate(&m2).unwrap());
    assert_eq!(bf1.to_bits(), bf2.to_bits());
    assert_ne!(e1.estimate(&m1).unwrap().log_value, e2.estimate(&m1).unwrap().log_value);
}

#[test]
fn mc_se_shrinks_like_inverse_root_t() {
    let ds = dataset(30, 4, 10);
    let cfg = PepConfig::zellner(30);
    let m = ModelSpec::full(4);
    let se = |t: usize, seed: u64| {
        MarginalEvaluator::new(&ds, &cfg, EstimatorSettings::new(MarginalMethod::Scheme1, t, seed))
            .unwrap()
            .estimate(&m)
            .unwrap()
            .mc_se
    };
    for seed in 0..3 {
        let ratio = se(2000, seed) / se(8000, seed + 100);
        assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "ratio {ratio}");
    }
}

#[test]
fn jeffreys_scheme2_matches_quadrature() {
    let ds = dataset(40, 2, 11);
    let cfg = PepConfig::jeffreys(40);
    let mc = MarginalEvaluator::new(&ds, &cfg, settings(MarginalMethod::Scheme2, 10_000)).unwrap();
    let quad = MarginalEvaluator::new(&ds, &cfg, settings(MarginalMethod::Quadrature, 0)).unwrap();
    for bits in ["10", "01", "11"] {
        let m = ModelSpec::parse_bits(bits).unwrap();
        let (lbf, se) = mc.scheme2_log_bf(&m).unwrap();
        let q = quad.estimate(&m).unwrap();
        assert!((lbf - q.excess).abs() <= 3.0 * se, "{bits}: {lbf} ± {se} vs {}", q.excess);
        assert_eq!(q.anchor, mc.estimate(&m).unwrap().anchor);
    }
}

#[test]
fn quadrature_requires_full_unit_information() {
    let ds = dataset(40, 2, 12);
    let mut cfg = PepConfig::jeffreys(40);
    cfg.delta = 10.0;
    assert!(MarginalEvaluator::new(&ds, &cfg, settings(MarginalMethod::Quadrature, 0)).is_err());
    assert_eq!(
        MarginalEvaluator::new(&ds, &PepConfig::zellner(40), settings(MarginalMethod::Quadrature, 0)).unwrap_err(),
        PepError::WrongBaseline
    );
}

#[test]
fn bic_method_matches_bic_delta() {
    let ds = dataset(40, 2, 13);
    let ev = MarginalEvaluator::new(&ds, &PepConfig::jeffreys(40), settings(MarginalMethod::Bic, 0)).unwrap();
    let a = ev.estimate(&ModelSpec::parse_bits("11").unwrap()).unwrap();
    let b = ev.estimate(&ModelSpec::null(2)).unwrap();
    let x = crate::stat::build_design(&ds, &ModelSpec::full(2)).unwrap();
    let rss = crate::stat::ols(ds.y(), &x).unwrap().rss;
    let ones = DMatrix::from_element(40, 1, 1.0);
    let rss0 = crate::stat::ols(ds.y(), &ones).unwrap().rss;
    assert_relative_eq!(-2.0 * a.log_bf(&b), bic_delta(rss, 3, rss0, 1, 40).unwrap(), epsilon = 1e-9);
}

#[test]
fn errors_name_the_model() {
    let ds = dataset(10, 2, 14);
    let mut x = ds.x().clone();
    x.column_mut(1).fill(0.0);
    let ds = Dataset::unnamed(ds.y().clone(), x).unwrap();
    let ev = MarginalEvaluator::new(&ds, &PepConfig::zellner(10), settings(MarginalMethod::Auto, 10)).unwrap();
    match ev.estimate(&ModelSpec::full(2)).unwrap_err() {
        PepError::InModel { model, source } => {
            assert_eq!(model, "X1+X2");
            assert!(matches!(*source, PepError::RankDeficient(_)));
        }
        e => panic!("unexpected {e:?}"),
    }
}
