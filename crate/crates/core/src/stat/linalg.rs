use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{PepError, Result};

/// Relative pivot floor for Cholesky factorizations.
pub const RANK_TOL: f64 = 1e-10;
/// Residual sums of squares below `PERFECT_FIT_TOL * yᵀy` count as an exact fit.
pub const PERFECT_FIT_TOL: f64 = 1e-20;

/// True when `rss` is zero up to rounding relative to `yty`.
pub fn is_perfect_fit(rss: f64, yty: f64) -> bool {
    !(rss > PERFECT_FIT_TOL * yty)
}

pub type Chol = Cholesky<f64, Dyn>;

/// Cholesky factor of a symmetric matrix; any squared pivot below
/// `RANK_TOL * max(diag)` is treated as a failure.
pub fn cholesky(a: &DMatrix<f64>) -> Result<Chol> {
    if !a.is_square() {
        return Err(PepError::DimensionMismatch(format!(
            "cholesky of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let max_diag = a.diagonal().iter().cloned().fold(0.0_f64, f64::max);
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| PepError::NotPositiveDefinite(format!("{}x{} factorization failed", a.nrows(), a.ncols())))?;
    let floor = RANK_TOL * max_diag;
    let l = chol.l_dirty();
    for i in 0..a.nrows() {
        let pivot = l[(i, i)] * l[(i, i)];
        if !(pivot > floor) {
            return Err(PepError::NotPositiveDefinite(format!(
                "pivot {i} is {pivot:e}, floor {floor:e}"
            )));
        }
    }
    Ok(chol)
}

/// Cholesky factor of `XᵀX`; failure is reported as rank deficiency of `X`.
pub fn gram_cholesky(x: &DMatrix<f64>) -> Result<Chol> {
    let xtx = x.tr_mul(x);
    cholesky(&xtx).map_err(|e| match e {
        PepError::NotPositiveDefinite(msg) => PepError::RankDeficient(msg),
        e => e,
    })
}

/// `log det A` from the factor of `A`.
pub fn chol_log_det(chol: &Chol) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Rebuilds `A = LLᵀ` from its factor.
pub fn chol_matrix(chol: &Chol) -> DMatrix<f64> {
    let l = chol.l();
    &l * l.transpose()
}

/// Least-squares summary of a regression of `y` on `X`.
#[derive(Debug, Clone)]
pub struct SufficientStats {
    pub beta_hat: DVector<f64>,
    pub rss: f64,
    /// Factor of `XᵀX`.
    pub xtx_chol: Chol,
    pub n_rows: usize,
}

/// Ordinary least squares via the normal equations.
pub fn ols(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<SufficientStats> {
    if y.len() != x.nrows() {
        return Err(PepError::DimensionMismatch(format!(
            "y has {} rows, X has {}",
            y.len(),
            x.nrows()
        )));
    }
    if x.nrows() <= x.ncols() {
        return Err(PepError::RankDeficient(format!(
            "{} rows for {} columns",
            x.nrows(),
            x.ncols()
        )));
    }
    let xtx_chol = gram_cholesky(x)?;
    let beta_hat = xtx_chol.solve(&x.tr_mul(y));
    let rss = (y - x * &beta_hat).norm_squared();
    Ok(SufficientStats {
        beta_hat,
        rss,
        xtx_chol,
        n_rows: x.nrows(),
    })
}

/// Quadratic form and log-determinant of `M = I + c·X A⁻¹ Xᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredForm {
    /// `yᵀ M⁻¹ y`
    pub quad: f64,
    /// `log det M`
    pub log_det: f64,
}

/// Evaluates `yᵀ[I + cX A⁻¹Xᵀ]⁻¹y` and `log det[I + cX A⁻¹Xᵀ]` through the
/// `d × d` matrix `A + cXᵀX`; the `n × n` matrix is never formed.
///
/// `a_chol` is the factor of `A` (in PEP, `A = X*ᵀX*`).
pub fn structured_form(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    a_chol: &Chol,
    c: f64,
) -> Result<StructuredForm> {
    let d = x.ncols();
    if y.len() != x.nrows() || a_chol.l_dirty().nrows() != d {
        return Err(PepError::DimensionMismatch(format!(
            "y: {}, X: {}x{}, A: {}",
            y.len(),
            x.nrows(),
            d,
            a_chol.l_dirty().nrows()
        )));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(PepError::Domain(format!("scale c = {c} must be finite and nonnegative")));
    }
    let yty = y.norm_squared();
    if c == 0.0 {
        return Ok(StructuredForm {
            quad: yty,
            log_det: 0.0,
        });
    }
    let a = chol_matrix(a_chol);
    let k = a + x.tr_mul(x) * c;
    let k_chol = cholesky(&k)?;
    let xty = x.tr_mul(y);
    let quad = yty - c * xty.dot(&k_chol.solve(&xty));
    let log_det = chol_log_det(&k_chol) - chol_log_det(a_chol);
    Ok(StructuredForm {
        quad: quad.max(0.0),
        log_det,
    })
}

/// Thin QR of a full-column-rank matrix with a positive diagonal in `R`.
pub(crate) fn thin_qr(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = x.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows() {
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    (q, r)
}
