use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{PepError, Result};

/// Nodes per Gauss-Legendre panel.
pub const GL_NODES: usize = 128;
/// Panel count at which refinement gives up.
pub const MAX_PANELS: usize = 1 << 12;
/// Agreement required between successive panel doublings.
pub const QUAD_TOL: f64 = 1e-8;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_m(x) and its derivative by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_NODES))
}

/// `log ∫ₐᵇ exp(f)` by composite Gauss-Legendre with `panels` panels.
fn log_composite(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = rule();
    let h = (b - a) / panels as f64;
    let mut terms = Vec::with_capacity(panels * GL_NODES);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in nodes.iter().zip(weights) {
            terms.push(f(mid + 0.5 * h * x) + (0.5 * h * w).ln());
        }
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// `log ∫ₐᵇ exp(f)`, doubling panels until successive values agree.
pub fn log_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let mut panels = 1;
    let mut prev = log_composite(&f, a, b, panels);
    while panels < MAX_PANELS {
        panels *= 2;
        let next = log_composite(&f, a, b, panels);
        if !next.is_finite() {
            return Err(PepError::IntegrationFailure(format!("non-finite value with {panels} panels")));
        }
        if (next - prev).abs() <= QUAD_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(PepError::IntegrationFailure(format!(
        "no agreement within {QUAD_TOL:e} after {MAX_PANELS} panels"
    )))
}

/// Exact J-PEP `log BF` of a model with `d_ell` coefficients against a
/// nested model with `d_0`, for `n* = δ = n`, through a one-dimensional
/// integral over `φ ∈ (0, π/2)`.
pub fn jpep_bf_quadrature(rss_ell: f64, rss_0: f64, d_ell: usize, d_0: usize, n: usize) -> Result<f64> {
    if !(rss_ell > 0.0 && rss_0 > 0.0) {
        return Err(PepError::Domain(format!("rss must be positive ({rss_ell}, {rss_0})")));
    }
    if !(n > d_ell && d_ell >= d_0 && d_0 >= 1) {
        return Err(PepError::Domain(format!(
            "need n > d_ell >= d_0 >= 1, got n = {n}, d_ell = {d_ell}, d_0 = {d_0}"
        )));
    }
    let nf = n as f64;
    let (e, e0) = ((n - d_ell) as f64, (n - d_0) as f64);
    let ratio = nf * rss_ell / rss_0;
    let log_f = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let s2 = s * s;
        (e0 - 1.0) * s.ln() + (e - 1.0) * c.ln() + 0.5 * e * (nf + s2).ln() - 0.5 * e0 * (ratio + s2).ln()
    };
    let log_int = log_integrate(log_f, 0.0, FRAC_PI_2)?;
    Ok(2f64.ln() + ln_gamma(e) - 2.0 * ln_gamma(0.5 * e) + log_int)
}

/// `BIC_ℓ − BIC_k = n log(RSS_ℓ/RSS_k) + (d_ℓ − d_k) log n`.
pub fn bic_delta(rss_ell: f64, d_ell: usize, rss_k: f64, d_k: usize, n: usize) -> Result<f64> {
    if !(rss_ell > 0.0 && rss_k > 0.0) {
        return Err(PepError::Domain(format!("rss must be positive ({rss_ell}, {rss_k})")));
    }
    if n <= d_ell.max(d_k) {
        return Err(PepError::Domain(format!("n = {n} must exceed both dimensions")));
    }
    let nf = n as f64;
    Ok(nf * (rss_ell / rss_k).ln() + (d_ell as f64 - d_k as f64) * nf.ln())
}
