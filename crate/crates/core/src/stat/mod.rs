//! Deterministic numerical foundations: data containers, least squares,
//! structured quadratic forms and log densities.

mod data;
mod density;
mod linalg;

pub use data::{build_design, Dataset, ModelSpec};
pub use density::{
    log_invgamma, log_mean_exp_with_se, log_mvstudent, logsumexp, student_log_density,
    student_log_norm,
};
pub use linalg::{
    chol_log_det, chol_matrix, cholesky, gram_cholesky, is_perfect_fit, ols, structured_form, Chol,
    StructuredForm, SufficientStats, PERFECT_FIT_TOL, RANK_TOL,
};
pub(crate) use linalg::thin_qr;
