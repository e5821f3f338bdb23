use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use super::config::{Baseline, PepConfig};
use crate::error::{PepError, Result};
use crate::stat::{
    build_design, chol_log_det, chol_matrix, cholesky, gram_cholesky, is_perfect_fit, ols, structured_form,
    student_log_density, student_log_norm, thin_qr, Chol, Dataset, ModelSpec,
};

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Normal-inverse-gamma parameters: `β | σ² ~ N(β̃, σ² Σ̃)`, `σ² ~ IG(ã, b̃)`.
#[derive(Debug, Clone)]
pub struct NigParams {
    pub beta_tilde: DVector<f64>,
    /// Factor of the precision matrix `Σ̃⁻¹`.
    pub precision_chol: Chol,
    pub a_tilde: f64,
    pub b_tilde: f64,
}

impl NigParams {
    pub fn sigma_tilde(&self) -> DMatrix<f64> {
        self.precision_chol.inverse()
    }

    /// One draw of `(β, σ²)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, f64) {
        let gamma = Gamma::new(self.a_tilde, 1.0).expect("positive shape");
        let sigma2 = self.b_tilde / gamma.sample(rng);
        let z = DVector::from_fn(self.beta_tilde.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let lt = self.precision_chol.l_dirty().transpose();
        let step = lt
            .solve_upper_triangular(&z)
            .expect("factor has a positive diagonal");
        (&self.beta_tilde + step * sigma2.sqrt(), sigma2)
    }
}

/// Multivariate Student density with scale `s · (I + c·D K⁻¹ Dᵀ)`, where
/// `K` is held by its factor.
#[derive(Debug, Clone)]
pub struct StudentPredictive {
    pub dof: f64,
    pub mean: DVector<f64>,
    pub scale: f64,
    c: f64,
    design: DMatrix<f64>,
    inner: Chol,
}

impl StudentPredictive {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn log_density(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(PepError::DimensionMismatch(format!(
                "point of length {} for a {}-dimensional density",
                v.len(),
                self.dim()
            )));
        }
        let n = self.dim();
        let sf = structured_form(&(v - &self.mean), &self.design, &self.inner, self.c)?;
        Ok(student_log_density(
            n,
            self.dof,
            student_log_norm(n, self.dof),
            sf.quad / self.scale,
            n as f64 * self.scale.ln() + sf.log_det,
        ))
    }

    /// Dense scale matrix; intended for small dimensions.
    pub fn scale_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let k_inv = self.inner.inverse();
        (DMatrix::identity(n, n) + &self.design * k_inv * self.design.transpose() * self.c) * self.scale
    }
}

/// A training response in the coordinates of the thin QR `X* = QR`:
/// `u = Qᵀy*` and `r2 = ‖y* − QQᵀy*‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDraw {
    pub u: DVector<f64>,
    pub r2: f64,
}

impl ReducedDraw {
    /// `y*ᵀy*`
    pub fn total(&self) -> f64 {
        self.u.norm_squared() + self.r2
    }

    /// Coordinates of the same `y*` in the constant model, whose `Q` is the
    /// first column of this one.
    pub fn to_null(&self) -> ReducedDraw {
        let mut out = ReducedDraw {
            u: DVector::zeros(1),
            r2: 0.0,
        };
        self.to_null_into(&mut out);
        out
    }

    pub fn to_null_into(&self, out: &mut ReducedDraw) {
        let tail: f64 = self.u.iter().skip(1).map(|v| v * v).sum();
        out.u[0] = self.u[0];
        out.r2 = self.r2 + tail;
    }
}

/// Scratch buffers for allocation-free reduced evaluations.
#[derive(Debug, Clone)]
pub struct Workspace {
    z: DVector<f64>,
    v: DVector<f64>,
}

/// Everything about one model that the PEP computations reuse across
/// Monte-Carlo draws.
#[derive(Debug, Clone)]
pub struct ModelKernel {
    model: ModelSpec,
    cfg: PepConfig,
    n: usize,
    n_star: usize,
    d: usize,
    y: DVector<f64>,
    x: DMatrix<f64>,
    xstar: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    a_chol: Chol,
    b: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    prior: PriorCache,
    cond: CondCache,
    pred: Option<PredCache>,
}

#[derive(Debug, Clone)]
struct PriorCache {
    /// Additive constant of `log m(y*)`; `None` for formal hyper-parameters.
    log_const: Option<f64>,
}

/// `m(y | y*)` with dof `dof`, location `k·Xβ̂*`, scale `s(y*)·(I + c·X A⁻¹Xᵀ)`.
#[derive(Debug, Clone)]
struct CondCache {
    k: f64,
    c: f64,
    dof: f64,
    log_norm: f64,
    log_det_m: f64,
    y_m_y: f64,
    h: DVector<f64>,
    g: DMatrix<f64>,
}

/// Baseline posterior predictive `m(y* | y)`.
#[derive(Debug, Clone)]
struct PredCache {
    mean: DVector<f64>,
    p_chol: Chol,
    a_post: f64,
    b_post: f64,
    log_norm: f64,
    center: DVector<f64>,
    c_lower: DMatrix<f64>,
    log_det_unit: f64,
    gamma: Gamma<f64>,
    chi2: ChiSquared<f64>,
}

impl ModelKernel {
    /// Kernel of `model` on `dataset`, using the training rows `rows`.
    pub fn new(dataset: &Dataset, model: &ModelSpec, cfg: &PepConfig, rows: &[usize]) -> Result<Self> {
        let x = build_design(dataset, model)?;
        Self::from_design(dataset.y().clone(), x, model.clone(), cfg, rows)
    }

    pub fn from_design(
        y: DVector<f64>,
        x: DMatrix<f64>,
        model: ModelSpec,
        cfg: &PepConfig,
        rows: &[usize],
    ) -> Result<Self> {
        let (n, d) = x.shape();
        let n_star = rows.len();
        if y.len() != n {
            return Err(PepError::DimensionMismatch(format!("y has {} rows, X has {n}", y.len())));
        }
        if rows.iter().any(|&i| i >= n) {
            return Err(PepError::DimensionMismatch("training row out of range".into()));
        }
        if n_star <= d {
            return Err(PepError::RankDeficient(format!("n* = {n_star} for {d} coefficients")));
        }
        let delta = cfg.delta;
        let xstar = x.select_rows(rows);
        let a_chol = gram_cholesky(&xstar)?;
        let (q, r) = thin_qr(&xstar);
        let b = x.tr_mul(&x);
        let xty = x.tr_mul(&y);
        let yty = y.norm_squared();
        let (ns, df) = (n_star as f64, d as f64);

        let log_det_a = chol_log_det(&a_chol);
        let prior = match cfg.baseline {
            Baseline::Jeffreys => PriorCache {
                log_const: Some(
                    cfg.log_c + 0.5 * (df - ns) * LN_PI - 0.5 * log_det_a + ln_gamma(0.5 * (ns - df)),
                ),
            },
            Baseline::GPrior { g, a, b: bb } => PriorCache {
                log_const: if cfg.baseline.is_formal() {
                    None
                } else {
                    Some(
                        ln_gamma(a + 0.5 * ns)
                            - ln_gamma(a)
                            - 0.5 * ns * (LN_2PI + bb.ln())
                            - 0.5 * ((ns - df) * delta.ln() + df * (delta + g).ln()),
                    )
                },
            },
        };

        let (k, c, dof) = match cfg.baseline {
            Baseline::Jeffreys => (1.0, delta, ns - df),
            Baseline::GPrior { g, a, .. } => {
                let w = g / (g + delta);
                (w, w * delta, 2.0 * a + ns)
            }
        };
        let a_mat = chol_matrix(&a_chol);
        let k_chol = cholesky(&(&a_mat + &b * c))?;
        let log_det_m = chol_log_det(&k_chol) - log_det_a;
        let k_inv_xty = k_chol.solve(&xty);
        let y_m_y = yty - c * xty.dot(&k_inv_xty);
        let h = &r * k_inv_xty;
        // XᵀM⁻¹X = B K⁻¹ A, symmetric
        let t = &b * k_chol.solve(&a_mat);
        let sym = (&t + t.transpose()) * 0.5;
        let rt = r.transpose();
        let w1 = rt.solve_lower_triangular(&sym).ok_or_else(singular)?;
        let g_mat = rt.solve_lower_triangular(&w1.transpose()).ok_or_else(singular)?.transpose();
        let g_mat = (&g_mat + g_mat.transpose()) * 0.5;
        let cond = CondCache {
            k,
            c,
            dof,
            log_norm: if dof > 0.0 { student_log_norm(n, dof) } else { f64::NAN },
            log_det_m,
            y_m_y,
            h,
            g: g_mat,
        };

        let pred = Self::predictive_cache(&y, &x, &b, &xty, &a_mat, &r, cfg, n_star)?;

        Ok(Self {
            model,
            cfg: *cfg,
            n,
            n_star,
            d,
            y,
            x,
            xstar,
            q,
            r,
            a_chol,
            b,
            xty,
            yty,
            prior,
            cond,
            pred,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn predictive_cache(
        y: &DVector<f64>,
        x: &DMatrix<f64>,
        b: &DMatrix<f64>,
        xty: &DVector<f64>,
        a_mat: &DMatrix<f64>,
        r: &DMatrix<f64>,
        cfg: &PepConfig,
        n_star: usize,
    ) -> Result<Option<PredCache>> {
        let (n, d) = x.shape();
        let (p_mat, mean, a_post, b_post) = match cfg.baseline {
            Baseline::Jeffreys => {
                if n <= d {
                    return Ok(None);
                }
                let fit = ols(y, x)?;
                if is_perfect_fit(fit.rss, y.norm_squared()) {
                    return Err(PepError::DegenerateTraining(fit.rss));
                }
                (b.clone(), fit.beta_hat, 0.5 * (n - d) as f64, 0.5 * fit.rss)
            }
            Baseline::GPrior { g, a, b: bb } => {
                let p_mat = b + a_mat / g;
                let mean = cholesky(&p_mat)?.solve(xty);
                let s = (y - x * &mean).norm_squared() + mean.dot(&(a_mat * &mean)) / g;
                (p_mat, mean, a + 0.5 * n as f64, bb + 0.5 * s)
            }
        };
        if !(a_post > 0.0) || !(b_post > 0.0) {
            return Ok(None);
        }
        let p_chol = cholesky(&p_mat)?;
        let delta = cfg.delta;
        let rp = p_chol.solve(&r.transpose());
        let c_mat = DMatrix::identity(d, d) * delta + r * rp;
        let c_chol = cholesky(&((&c_mat + c_mat.transpose()) * 0.5))?;
        let log_det_unit = (n_star - d) as f64 * delta.ln() + chol_log_det(&c_chol);
        Ok(Some(PredCache {
            center: r * &mean,
            mean,
            p_chol,
            a_post,
            b_post,
            log_norm: student_log_norm(n_star, 2.0 * a_post),
            c_lower: c_chol.l(),
            log_det_unit,
            gamma: Gamma::new(a_post, 1.0).map_err(|e| PepError::Domain(e.to_string()))?,
            chi2: ChiSquared::new((n_star - d) as f64).map_err(|e| PepError::Domain(e.to_string()))?,
        }))
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn config(&self) -> &PepConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_star(&self) -> usize {
        self.n_star
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn training_design(&self) -> &DMatrix<f64> {
        &self.xstar
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Upper-triangular `R` of `X* = QR`.
    pub fn r_factor(&self) -> &DMatrix<f64> {
        &self.r
    }

    fn check_ystar(&self, ystar: &DVector<f64>) -> Result<()> {
        if ystar.len() != self.n_star {
            return Err(PepError::DimensionMismatch(format!(
                "y* has length {}, n* = {}",
                ystar.len(),
                self.n_star
            )));
        }
        Ok(())
    }

    /// Projects an explicit `y*` onto the reduced coordinates.
    pub fn reduce(&self, ystar: &DVector<f64>) -> Result<ReducedDraw> {
        self.check_ystar(ystar)?;
        let u = self.q.tr_mul(ystar);
        let r2 = (ystar - &self.q * &u).norm_squared();
        Ok(ReducedDraw { u, r2 })
    }

    fn delta(&self) -> f64 {
        self.cfg.delta
    }

    /// `SS*` of the g-prior baseline from `RSS*` and `F = y*ᵀy* − RSS*`.
    fn ss_star(&self, rss: f64, fitted: f64) -> f64 {
        match self.cfg.baseline {
            Baseline::GPrior { g, .. } => rss / self.delta() + fitted / (g + self.delta()),
            Baseline::Jeffreys => rss / self.delta(),
        }
    }

    fn prior_from_stats(&self, rss: f64, fitted: f64) -> Result<f64> {
        let log_const = self.prior.log_const.ok_or_else(|| {
            PepError::Domain("prior predictive needs proper hyper-parameters".into())
        })?;
        let ns = self.n_star as f64;
        match self.cfg.baseline {
            Baseline::Jeffreys => {
                if !(rss > 0.0) {
                    return Err(PepError::DegenerateTraining(rss));
                }
                Ok(log_const - 0.5 * (ns - self.d as f64) * rss.ln())
            }
            Baseline::GPrior { a, b, .. } => {
                let ss = self.ss_star(rss, fitted);
                Ok(log_const - (a + 0.5 * ns) * (ss / (2.0 * b)).ln_1p())
            }
        }
    }

    fn prior_kernel_from_stats(&self, rss: f64, fitted: f64) -> Result<f64> {
        let ns = self.n_star as f64;
        match self.cfg.baseline {
            Baseline::Jeffreys => {
                if !(rss > 0.0) {
                    return Err(PepError::DegenerateTraining(rss));
                }
                Ok(-0.5 * (ns - self.d as f64) * rss.ln())
            }
            Baseline::GPrior { a, b, .. } => {
                let base = 2.0 * b + self.ss_star(rss, fitted);
                if !(base > 0.0) {
                    return Err(PepError::DegenerateTraining(base));
                }
                Ok(-(a + 0.5 * ns) * base.ln())
            }
        }
    }

    /// Baseline prior predictive `log m(y*)`.
    pub fn log_prior_predictive(&self, ystar: &DVector<f64>) -> Result<f64> {
        self.check_ystar(ystar)?;
        let fit = ols(ystar, &self.xstar)?;
        self.prior_from_stats(fit.rss, ystar.norm_squared() - fit.rss)
    }

    /// Unnormalized `log m(y*)`: `-(n*−d)/2·log RSS*` for Jeffreys and
    /// `-(a + n*/2)·log(2b + SS*)` for the g-prior. Defined for formal
    /// hyper-parameters too.
    pub fn log_prior_predictive_kernel(&self, ystar: &DVector<f64>) -> Result<f64> {
        self.check_ystar(ystar)?;
        let fit = ols(ystar, &self.xstar)?;
        self.prior_kernel_from_stats(fit.rss, ystar.norm_squared() - fit.rss)
    }

    pub fn log_prior_predictive_reduced(&self, draw: &ReducedDraw) -> Result<f64> {
        self.prior_from_stats(draw.r2, draw.u.norm_squared())
    }

    pub fn log_prior_predictive_kernel_reduced(&self, draw: &ReducedDraw) -> Result<f64> {
        self.prior_kernel_from_stats(draw.r2, draw.u.norm_squared())
    }

    /// Scale factor `s(y*)` of the conditional marginal.
    fn cond_scale(&self, rss: f64, fitted: f64) -> Result<f64> {
        let s = match self.cfg.baseline {
            Baseline::Jeffreys => rss / (self.delta() * self.cond.dof),
            Baseline::GPrior { b, .. } => (2.0 * b + self.ss_star(rss, fitted)) / self.cond.dof,
        };
        if !(s > 0.0) || !s.is_finite() {
            return Err(PepError::DegenerateTraining(s));
        }
        Ok(s)
    }

    fn check_cond_dof(&self) -> Result<()> {
        if !(self.cond.dof > 0.0) {
            return Err(PepError::NonpositiveDof(self.cond.dof));
        }
        Ok(())
    }

    /// Conditional marginal `m(y | y*)` as a Student density over `y`.
    pub fn conditional_marginal(&self, ystar: &DVector<f64>) -> Result<StudentPredictive> {
        self.check_ystar(ystar)?;
        self.check_cond_dof()?;
        let fit = ols(ystar, &self.xstar)?;
        let scale = self.cond_scale(fit.rss, ystar.norm_squared() - fit.rss)?;
        Ok(StudentPredictive {
            dof: self.cond.dof,
            mean: &self.x * fit.beta_hat * self.cond.k,
            scale,
            c: self.cond.c,
            design: self.x.clone(),
            inner: self.a_chol.clone(),
        })
    }

    /// `log m(y | y*)` at the observed `y`.
    pub fn log_conditional_marginal(&self, ystar: &DVector<f64>) -> Result<f64> {
        self.conditional_marginal(ystar)?.log_density(&self.y)
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            z: DVector::zeros(self.d),
            v: DVector::zeros(self.d),
        }
    }

    /// A zeroed draw of the right dimension, to be filled by
    /// [`sample_reduced_into`](Self::sample_reduced_into).
    pub fn empty_draw(&self) -> ReducedDraw {
        ReducedDraw {
            u: DVector::zeros(self.d),
            r2: 0.0,
        }
    }

    /// `(y − kXβ̂*)ᵀM⁻¹(y − kXβ̂*)` from `u`.
    fn cond_quad(&self, u: &DVector<f64>, ws: &mut Workspace) -> f64 {
        let cc = &self.cond;
        ws.v.gemv(1.0, &cc.g, u, 0.0);
        (cc.y_m_y - 2.0 * cc.k * cc.h.dot(u) + cc.k * cc.k * u.dot(&ws.v)).max(0.0)
    }

    pub fn log_conditional_marginal_reduced(&self, draw: &ReducedDraw) -> Result<f64> {
        self.log_conditional_marginal_with(draw, &mut self.workspace())
    }

    pub fn log_conditional_marginal_with(&self, draw: &ReducedDraw, ws: &mut Workspace) -> Result<f64> {
        self.check_cond_dof()?;
        let cc = &self.cond;
        let scale = self.cond_scale(draw.r2, draw.u.norm_squared())?;
        let quad = self.cond_quad(&draw.u, ws);
        let n = self.n;
        Ok(student_log_density(
            n,
            cc.dof,
            cc.log_norm,
            quad / scale,
            n as f64 * scale.ln() + cc.log_det_m,
        ))
    }

    fn posterior_from(&self, xsty: DVector<f64>, rss: f64, fitted: f64, ss_n: f64) -> Result<NigParams> {
        let delta = self.delta();
        let (ns, n, df) = (self.n_star as f64, self.n as f64, self.d as f64);
        let a_mat = chol_matrix(&self.a_chol);
        let (scale, a_tilde, b_tilde) = match self.cfg.baseline {
            Baseline::Jeffreys => (
                1.0 / delta,
                0.5 * (n + ns - df),
                0.5 * (ss_n + rss / delta),
            ),
            Baseline::GPrior { g, a, b } => {
                let w = g / (g + delta);
                (
                    1.0 / (w * delta),
                    0.5 * (n + ns) + a,
                    0.5 * (ss_n + self.ss_star(rss, fitted)) + b,
                )
            }
        };
        if !(b_tilde > 0.0) {
            return Err(PepError::NonpositiveBTilde(b_tilde));
        }
        if !(a_tilde > 0.0) {
            return Err(PepError::NonpositiveDof(2.0 * a_tilde));
        }
        let precision_chol = cholesky(&(&self.b + a_mat * scale))?;
        let beta_tilde = precision_chol.solve(&(&self.xty + xsty / delta));
        Ok(NigParams {
            beta_tilde,
            precision_chol,
            a_tilde,
            b_tilde,
        })
    }

    /// Conditional posterior of `(β, σ²)` given `y` and `y*`.
    pub fn conditional_posterior(&self, ystar: &DVector<f64>) -> Result<NigParams> {
        self.check_ystar(ystar)?;
        let fit = ols(ystar, &self.xstar)?;
        let resid = &self.y - &self.x * &fit.beta_hat * self.cond.k;
        let ss_n = structured_form(&resid, &self.x, &self.a_chol, self.cond.c)?.quad;
        self.posterior_from(
            self.xstar.tr_mul(ystar),
            fit.rss,
            ystar.norm_squared() - fit.rss,
            ss_n,
        )
    }

    pub fn conditional_posterior_reduced(&self, draw: &ReducedDraw) -> Result<NigParams> {
        let ss_n = self.cond_quad(&draw.u, &mut self.workspace());
        self.posterior_from(self.r.tr_mul(&draw.u), draw.r2, draw.u.norm_squared(), ss_n)
    }

    fn pred(&self) -> Result<&PredCache> {
        self.pred.as_ref().ok_or_else(|| {
            PepError::Domain(format!(
                "baseline posterior of y* is improper for d = {} and n = {}",
                self.d, self.n
            ))
        })
    }

    /// Baseline posterior predictive `m(y* | y)` over training responses.
    pub fn predictive_ystar(&self) -> Result<StudentPredictive> {
        let p = self.pred()?;
        Ok(StudentPredictive {
            dof: 2.0 * p.a_post,
            mean: &self.xstar * &p.mean,
            scale: p.b_post / p.a_post * self.delta(),
            c: 1.0 / self.delta(),
            design: self.xstar.clone(),
            inner: p.p_chol.clone(),
        })
    }

    pub fn log_predictive_ystar(&self, ystar: &DVector<f64>) -> Result<f64> {
        self.check_ystar(ystar)?;
        self.predictive_ystar()?.log_density(ystar)
    }

    pub fn log_predictive_reduced(&self, draw: &ReducedDraw) -> Result<f64> {
        self.log_predictive_with(draw, &mut self.workspace())
    }

    pub fn log_predictive_with(&self, draw: &ReducedDraw, ws: &mut Workspace) -> Result<f64> {
        let p = self.pred()?;
        ws.v.copy_from(&draw.u);
        ws.v -= &p.center;
        if !p.c_lower.solve_lower_triangular_mut(&mut ws.v) {
            return Err(singular());
        }
        let quad_unit = draw.r2 / self.delta() + ws.v.norm_squared();
        let s = p.b_post / p.a_post;
        let ns = self.n_star;
        Ok(student_log_density(
            ns,
            2.0 * p.a_post,
            p.log_norm,
            quad_unit / s,
            ns as f64 * s.ln() + p.log_det_unit,
        ))
    }

    fn draw_sigma2<R: Rng + ?Sized>(p: &PredCache, rng: &mut R) -> f64 {
        p.b_post / p.gamma.sample(rng)
    }

    /// Draws `y*` from `m(y* | y)`: `σ²` from its posterior, `β | σ²`, then
    /// `y* ~ N(X*β, δσ²I)`.
    pub fn sample_ystar<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let p = self.pred()?;
        let sigma2 = Self::draw_sigma2(p, rng);
        let z = DVector::from_fn(self.d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = p
            .p_chol
            .l_dirty()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or_else(singular)?;
        let beta = &p.mean + step * sigma2.sqrt();
        let sd = (self.delta() * sigma2).sqrt();
        let eps = DVector::from_fn(self.n_star, |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(&self.xstar * beta + eps * sd)
    }

    /// Same distribution as [`sample_ystar`](Self::sample_ystar) in reduced
    /// coordinates: `u | σ² ~ N(Rm, σ²(δI + R P⁻¹Rᵀ))`, `r2 ~ δσ² χ²(n*−d)`.
    pub fn sample_reduced<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ReducedDraw> {
        let mut draw = self.empty_draw();
        self.sample_reduced_into(rng, &mut self.workspace(), &mut draw)?;
        Ok(draw)
    }

    pub fn sample_reduced_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        ws: &mut Workspace,
        draw: &mut ReducedDraw,
    ) -> Result<()> {
        let p = self.pred()?;
        let sigma2 = Self::draw_sigma2(p, rng);
        for z in ws.z.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        draw.u.copy_from(&p.center);
        draw.u.gemv(sigma2.sqrt(), &p.c_lower, &ws.z, 1.0);
        draw.r2 = self.delta() * sigma2 * p.chi2.sample(rng);
        Ok(())
    }

    /// Baseline marginal likelihood `log m(y)` of the model.
    pub fn log_baseline_marginal(&self) -> Result<f64> {
        let (n, d) = (self.n as f64, self.d as f64);
        match self.cfg.baseline {
            Baseline::Jeffreys => {
                if self.n <= self.d {
                    return Err(PepError::RankDeficient(format!("n = {} for d = {}", self.n, self.d)));
                }
                let fit = ols(&self.y, &self.x)?;
                if is_perfect_fit(fit.rss, self.yty) {
                    return Err(PepError::DegenerateTraining(fit.rss));
                }
                Ok(self.cfg.log_c + 0.5 * (d - n) * LN_PI - 0.5 * chol_log_det(&fit.xtx_chol)
                    + ln_gamma(0.5 * (n - d))
                    - 0.5 * (n - d) * fit.rss.ln())
            }
            Baseline::GPrior { g, a, b } => {
                if self.cfg.baseline.is_formal() {
                    return Err(PepError::Domain("marginal needs proper hyper-parameters".into()));
                }
                let sf = structured_form(&self.y, &self.x, &self.a_chol, g)?;
                let s = b / a;
                let dof = 2.0 * a;
                Ok(student_log_density(
                    self.n,
                    dof,
                    student_log_norm(self.n, dof),
                    sf.quad / s,
                    n * s.ln() + sf.log_det,
                ))
            }
        }
    }

    /// `yᵀy` of the observed response.
    pub fn yty(&self) -> f64 {
        self.yty
    }
}

fn singular() -> PepError {
    PepError::NotPositiveDefinite("singular triangular factor".into())
}
