use std::f64::consts::PI;

use nalgebra::DVector;
use statrs::function::gamma::ln_gamma;

use super::linalg::{chol_log_det, Chol};
use crate::error::{PepError, Result};

/// Normalizing constant of an `n`-dimensional Student density with `dof`
/// degrees of freedom and unit scale determinant.
pub fn student_log_norm(n: usize, dof: f64) -> f64 {
    let n = n as f64;
    ln_gamma(0.5 * (dof + n)) - ln_gamma(0.5 * dof) - 0.5 * n * (dof * PI).ln()
}

/// Student log density from its pieces: `quad = (y-μ)ᵀΣ⁻¹(y-μ)`,
/// `log_det = log det Σ`, `log_norm = student_log_norm(n, dof)`.
#[inline]
pub fn student_log_density(n: usize, dof: f64, log_norm: f64, quad: f64, log_det: f64) -> f64 {
    log_norm - 0.5 * log_det - 0.5 * (dof + n as f64) * (quad / dof).ln_1p()
}

/// Log density of `St_n(y; dof, mu, Σ)` with `Σ` given by its Cholesky factor.
pub fn log_mvstudent(y: &DVector<f64>, dof: f64, mu: &DVector<f64>, scale: &Chol) -> Result<f64> {
    if !(dof > 0.0) {
        return Err(PepError::NonpositiveDof(dof));
    }
    let n = y.len();
    if mu.len() != n || scale.l_dirty().nrows() != n {
        return Err(PepError::DimensionMismatch(format!(
            "y: {n}, mu: {}, scale: {}",
            mu.len(),
            scale.l_dirty().nrows()
        )));
    }
    let diff = y - mu;
    let z = scale
        .l_dirty()
        .solve_lower_triangular(&diff)
        .ok_or_else(|| PepError::NotPositiveDefinite("singular scale factor".into()))?;
    Ok(student_log_density(
        n,
        dof,
        student_log_norm(n, dof),
        z.norm_squared(),
        chol_log_det(scale),
    ))
}

/// Log density of the Inverse-Gamma distribution with shape `a`, scale `b`.
pub fn log_invgamma(y: f64, a: f64, b: f64) -> Result<f64> {
    if !(y > 0.0 && a > 0.0 && b > 0.0) {
        return Err(PepError::Domain(format!(
            "inverse-gamma needs y, a, b > 0 (y = {y}, a = {a}, b = {b})"
        )));
    }
    Ok(a * b.ln() - ln_gamma(a) - (a + 1.0) * y.ln() - b / y)
}

/// `log Σ exp(v)` with max-shift.
pub fn logsumexp(values: &[f64]) -> Result<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(PepError::AllNegInf);
    }
    if max == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    Ok(max + s.ln())
}

/// Log of the sample mean of `exp(v)` together with its delta-method
/// standard error `sd(w) / (√T · mean(w))`.
pub fn log_mean_exp_with_se(values: &[f64]) -> Result<(f64, f64)> {
    let t = values.len();
    let lse = logsumexp(values)?;
    let log_mean = lse - (t as f64).ln();
    if t < 2 {
        return Ok((log_mean, 0.0));
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if values.iter().all(|&v| v == max) {
        return Ok((log_mean, 0.0));
    }
    let w: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let mean = w.iter().sum::<f64>() / t as f64;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
    Ok((log_mean, (var / t as f64).sqrt() / mean))
}

#[cfg(test)]
mod tests {
    use super::super::linalg::cholesky;
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cauchy_at_mode() {
        let one = cholesky(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        let v = log_mvstudent(&DVector::zeros(1), 1.0, &DVector::zeros(1), &one).unwrap();
        assert_relative_eq!(v, (1.0 / PI).ln(), epsilon = 1e-12);
        assert_relative_eq!(v, -1.1447299, epsilon = 1e-7);
    }

    #[test]
    fn large_dof_is_normal() {
        let one = cholesky(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        let v = log_mvstudent(&DVector::from_element(1, 1.0), 1e6, &DVector::zeros(1), &one).unwrap();
        let normal = (-0.5f64).exp() / (2.0 * PI).sqrt();
        assert!((v.exp() - normal).abs() < 1e-5);
    }

    #[test]
    fn matches_dense_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = DMatrix::from_fn(3, 3, |i, j| if i >= j { rng.random_range(0.2..1.0) } else { 0.0 });
        let sigma = &l * l.transpose();
        let y = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let mu = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let dof = 4.3;
        let v = log_mvstudent(&y, dof, &mu, &cholesky(&sigma).unwrap()).unwrap();
        let diff = &y - &mu;
        let q = (diff.transpose() * sigma.clone().try_inverse().unwrap() * &diff)[0];
        let dense = ln_gamma((dof + 3.0) / 2.0)
            - ln_gamma(dof / 2.0)
            - 1.5 * (dof * PI).ln()
            - 0.5 * sigma.determinant().ln()
            - (dof + 3.0) / 2.0 * (1.0 + q / dof).ln();
        assert_relative_eq!(v, dense, epsilon = 1e-10);
    }

    #[test]
    fn location_scale_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let l = DMatrix::from_fn(4, 4, |i, j| if i >= j { rng.random_range(0.2..1.0) } else { 0.0 });
        let sigma = &l * l.transpose();
        let y = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
        let mu = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let mu2 = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let s: f64 = 1.7;
        let lhs = log_mvstudent(&y, 3.0, &mu, &cholesky(&(&sigma * (s * s))).unwrap()).unwrap();
        let shifted = (&y - &mu) / s + &mu2;
        let rhs = log_mvstudent(&shifted, 3.0, &mu2, &cholesky(&sigma).unwrap()).unwrap() - 4.0 * s.ln();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_dof() {
        let one = cholesky(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!(matches!(
            log_mvstudent(&DVector::zeros(1), 0.0, &DVector::zeros(1), &one),
            Err(PepError::NonpositiveDof(_))
        ));
    }

    #[test]
    fn invgamma_values() {
        assert_relative_eq!(log_invgamma(1.0, 1.0, 1.0).unwrap(), -1.0, epsilon = 1e-14);
        assert!(log_invgamma(0.0, 1.0, 1.0).is_err());
        assert!(log_invgamma(1.0, -1.0, 1.0).is_err());
        assert!(log_invgamma(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn invgamma_mean_by_grid() {
        // a = 2, b = 1 has mean 1; integrate y·f(y) over y = e^t
        let (lo, hi, m) = (-20.0, 40.0, 600_000);
        let h = (hi - lo) / m as f64;
        let mean: f64 = (0..=m)
            .map(|i| {
                let t = lo + i as f64 * h;
                (log_invgamma(t.exp(), 2.0, 1.0).unwrap() + 2.0 * t).exp() * h
            })
            .sum();
        assert!((mean - 1.0).abs() < 1e-3, "mean {mean}");
    }

    #[test]
    fn invgamma_default_baseline_integrates_to_one() {
        // a = b = 0.01: substitute y = exp(t) and integrate f(e^t) e^t dt
        let (lo, hi, m) = (-60.0, 700.0, 2_000_000);
        let h = (hi - lo) / m as f64;
        let total: f64 = (0..=m)
            .map(|i| {
                let t = lo + i as f64 * h;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                w * (log_invgamma(t.exp(), 0.01, 0.01).unwrap() + t).exp() * h
            })
            .sum();
        // analytic tail beyond e^hi: ∫ b^a/Γ(a) y^{-a-1} dy ≈ b^a/(aΓ(a)) e^{-a·hi}
        let tail = (0.01f64.ln() * 0.01 - ln_gamma(0.01)).exp() / 0.01 * (-0.01 * hi).exp();
        assert!((total + tail - 1.0).abs() < 1e-4, "total {total} tail {tail}");
    }

    #[test]
    fn logsumexp_basics() {
        assert_relative_eq!(logsumexp(&[0.0, 0.0]).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(
            logsumexp(&[-1000.0, -1000.0]).unwrap(),
            -1000.0 + 2f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(
            logsumexp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]),
            Err(PepError::AllNegInf)
        );
        assert_relative_eq!(logsumexp(&[f64::NEG_INFINITY, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn logsumexp_matches_compensated_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let v: Vec<f64> = (0..1000).map(|_| rng.random_range(-30.0..30.0)).collect();
        // oracle: Neumaier summation of exp(v - max) over sorted terms
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        let mut terms: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for t in terms {
            let s = sum + t;
            comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
            sum = s;
        }
        let oracle = max + (sum + comp).ln();
        assert!((logsumexp(&v).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn log_mean_exp_constant_has_zero_se() {
        let (m, se) = log_mean_exp_with_se(&[0.3; 50]).unwrap();
        assert_relative_eq!(m, 0.3, epsilon = 1e-14);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn log_mean_exp_se_matches_definition() {
        let v = [0.0, 2f64.ln()];
        let (m, se) = log_mean_exp_with_se(&v).unwrap();
        assert_relative_eq!(m, 1.5f64.ln(), epsilon = 1e-14);
        // w = (0.5, 1), mean 0.75, sample var 0.125
        assert_relative_eq!(se, (0.125f64 / 2.0).sqrt() / 0.75, epsilon = 1e-14);
    }
}
