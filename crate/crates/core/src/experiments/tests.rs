use approx::assert_relative_eq;

use super::*;
use crate::marginal::MarginalMethod;

fn small_dataset(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = rng::stream(seed, "test-data", &[]);
    let x = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |i, _| 2.0 + x[(i, 0)] - 0.5 * x[(i, 2)] + noise * rng.sample::<f64, _>(StandardNormal));
    Dataset::unnamed(y, x).unwrap()
}

#[test]
fn nott_kohn_shape_and_determinism() {
    let a = nott_kohn_generate(1);
    assert_eq!((a.dataset.n(), a.dataset.p()), (50, 15));
    assert_eq!(a.true_gamma.included(), vec![0, 4, 6, 10, 12]);
    assert_eq!(a, nott_kohn_generate(1));
    assert_ne!(a.dataset, nott_kohn_generate(2).dataset);
    assert_eq!(a.dataset.names()[10], "X11");
}

#[test]
fn nott_kohn_moments() {
    let reps: Vec<_> = (0..200).map(nott_kohn_generate).collect();
    let y: Vec<f64> = reps.iter().flat_map(|r| r.dataset.y().iter().copied()).collect();
    let m = y.len() as f64;
    let mean = y.iter().sum::<f64>() / m;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    assert!((mean - 4.0).abs() <= 4.0 * sd / m.sqrt(), "mean {mean}");

    // X11 on (1, X1..X5) over the pooled rows
    let rows = y.len();
    let mut design = DMatrix::zeros(rows, 6);
    let mut x11 = DVector::zeros(rows);
    let mut i = 0;
    for r in &reps {
        let x = r.dataset.x();
        for k in 0..x.nrows() {
            design[(i, 0)] = 1.0;
            for j in 0..5 {
                design[(i, j + 1)] = x[(k, j)];
            }
            x11[i] = x[(k, 10)];
            i += 1;
        }
    }
    let fit = ols(&x11, &design).unwrap();
    let s2 = fit.rss / (rows - 6) as f64;
    let inv = fit.xtx_chol.inverse();
    for (j, want) in [0.3, 0.5, 0.7, 0.9, 1.1].into_iter().enumerate() {
        let se = (s2 * inv[(j + 1, j + 1)]).sqrt();
        assert!((fit.beta_hat[j + 1] - want).abs() <= 3.0 * se, "coef {j}: {}", fit.beta_hat[j + 1]);
    }
}

#[test]
fn sensitivity_rows_and_full_data_determinism() {
    let ds = small_dataset(20, 1.0, 3);
    let opts = PepOptions::new(BaselineKind::GPrior);
    let s = EstimatorSettings::new(MarginalMethod::Auto, 100, 4);
    let rows = nstar_sensitivity(&ds, &opts, &[5, 12, 20], s, 9).unwrap();
    assert_eq!(rows.iter().map(|r| r.n_star).collect::<Vec<_>>(), vec![5, 12, 20]);
    assert!(rows.iter().all(|r| r.inclusion.len() == 3));
    let again = nstar_sensitivity(&ds, &opts, &[20], s, 123).unwrap();
    assert_eq!(again[0], rows[2]);
    assert!(nstar_sensitivity(&ds, &opts, &[4], s, 9).is_err());
}

#[test]
fn rmse_is_permutation_invariant_and_exact_on_toy() {
    let pred = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 1.0, 2.0, 5.0]);
    let y = DVector::from_vec(vec![1.0, 2.0, 4.0]);
    assert_relative_eq!(posterior_rmse(&pred, &y), (2.0f64 / 6.0).sqrt(), epsilon = 1e-15);
    let perm = DMatrix::from_columns(&[pred.column(2), pred.column(0), pred.column(1)]);
    let yp = DVector::from_vec(vec![4.0, 1.0, 2.0]);
    assert_relative_eq!(posterior_rmse(&perm, &yp), posterior_rmse(&pred, &y), epsilon = 1e-15);
}

#[test]
fn split_half_report_shape_and_floor() {
    let ds = small_dataset(40, 0.3, 5);
    let model = ModelSpec::parse_bits("101").unwrap();
    let zpep = RmseMethod::Pep(PepOptions::new(BaselineKind::GPrior));
    let rep = split_half_rmse(&ds, &model, &zpep, 10, 200, 1).unwrap();
    assert_eq!(rep.values.len(), 10);
    assert!(rep.values.iter().all(|&v| v >= 0.0));
    let ym = ds.y().mean();
    let ysd = (ds.y().iter().map(|v| (v - ym).powi(2)).sum::<f64>() / 39.0).sqrt();
    assert!(rep.mean < 0.5 * ysd, "{} vs {}", rep.mean, ysd);
    assert_eq!(rep, split_half_rmse(&ds, &model, &zpep, 10, 200, 1).unwrap());

    let tiny = small_dataset(3, 1.0, 1);
    assert!(split_half_rmse(&tiny, &model, &zpep, 1, 10, 1).is_err());
}

#[test]
fn split_half_methods_agree_and_stable_in_draws() {
    let ds = small_dataset(60, 1.0, 6);
    let model = ModelSpec::parse_bits("101").unwrap();
    let zpep = RmseMethod::Pep(PepOptions::new(BaselineKind::GPrior));
    let z = split_half_rmse(&ds, &model, &zpep, 20, 500, 2).unwrap();
    let r = split_half_rmse(&ds, &model, &RmseMethod::Reference, 20, 500, 2).unwrap();
    assert!((z.mean - r.mean).abs() <= 0.05 * r.mean, "{} vs {}", z.mean, r.mean);
    let z2 = split_half_rmse(&ds, &model, &zpep, 20, 1000, 2).unwrap();
    assert!((z2.mean - z.mean).abs() <= 0.01 * z.mean);
}

#[test]
fn split_half_redraws_rank_deficient_halves() {
    // a covariate nonzero on few rows leaves many modeling halves collinear
    let mut ds = small_dataset(12, 1.0, 7);
    let mut x = ds.x().clone();
    for i in 0..12 {
        x[(i, 1)] = if i < 3 { 1.0 + i as f64 } else { 0.0 };
    }
    ds = Dataset::unnamed(ds.y().clone(), x).unwrap();
    let model = ModelSpec::parse_bits("010").unwrap();
    let rep = split_half_rmse(&ds, &model, &RmseMethod::Reference, 5, 50, 3).unwrap();
    assert_eq!(rep.values.len(), 5);
}

#[test]
fn parsimony_identical_configs_give_fraction_one() {
    let reps: Vec<_> = (0..2).map(nott_kohn_generate).collect();
    let opts = PepOptions::new(BaselineKind::Jeffreys);
    let s = EstimatorSettings::new(MarginalMethod::Quadrature, 1, 0);
    let sum = parsimony_comparison(&reps, &opts, &opts, s).unwrap();
    assert_eq!(sum.fraction_not_larger, 1.0);
    assert_eq!(sum.mean_inclusion_first, sum.mean_inclusion_second);
    assert_eq!(sum.rows.len(), 2);
}

#[test]
fn consistency_curve_grows_evidence() {
    let design = ConsistencyDesign {
        replicates: 30,
        ..Default::default()
    };
    let rows = consistency_curve(&[100, 500, 2000], &design, 1).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].log_bf < rows[1].log_bf && rows[1].log_bf < rows[2].log_bf);
    assert!(rows.iter().all(|r| r.gap.is_finite() && r.gap >= 0.0));
    assert_eq!(rows, consistency_curve(&[100, 500, 2000], &design, 1).unwrap());
    assert!(consistency_curve(&[500, 100], &design, 1).is_err());
}

#[test]
fn consistency_gap_vanishes_for_a_model_against_itself() {
    let rss = 12.5;
    assert_eq!(bic_delta(rss, 3, rss, 3, 100).unwrap(), 0.0);
}
