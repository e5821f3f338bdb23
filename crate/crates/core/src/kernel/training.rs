use nalgebra::DMatrix;
use rand::seq::index;

use super::config::{PepConfig, TrainingPolicy};
use crate::error::{PepError, Result};
use crate::rng;
use crate::stat::{build_design, gram_cholesky, Dataset, ModelSpec};

/// Fresh draws attempted before a collinear subsample is reported.
pub const MAX_TRAINING_DRAWS: u64 = 100;

/// Imaginary-data design `X*` for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDesign {
    pub xstar: DMatrix<f64>,
    pub row_ids: Vec<usize>,
}

/// Rows of `X` that form the imaginary design, shared by every model.
///
/// Subsamples are redrawn until the full candidate design restricted to
/// the rows has full column rank, which makes every sub-model full rank too.
pub fn training_rows(dataset: &Dataset, cfg: &PepConfig) -> Result<Vec<usize>> {
    cfg.validate(dataset.n(), dataset.p())?;
    match cfg.training {
        TrainingPolicy::FullData => Ok((0..dataset.n()).collect()),
        TrainingPolicy::Subsample { seed } => {
            let full = build_design(dataset, &ModelSpec::full(dataset.p()))?;
            for attempt in 0..MAX_TRAINING_DRAWS {
                let mut rng = rng::stream(seed, "training-rows", &[cfg.n_star as u64, attempt]);
                let mut rows = index::sample(&mut rng, dataset.n(), cfg.n_star).into_vec();
                rows.sort_unstable();
                if gram_cholesky(&full.select_rows(&rows)).is_ok() {
                    return Ok(rows);
                }
            }
            Err(PepError::RankDeficient(format!(
                "no full-rank training subsample of size {} in {MAX_TRAINING_DRAWS} draws",
                cfg.n_star
            )))
        }
    }
}

/// Builds `X*` for `model`.
pub fn make_training_design(
    dataset: &Dataset,
    model: &ModelSpec,
    cfg: &PepConfig,
) -> Result<TrainingDesign> {
    let row_ids = training_rows(dataset, cfg)?;
    let design = build_design(dataset, model)?;
    Ok(TrainingDesign {
        xstar: design.select_rows(&row_ids),
        row_ids,
    })
}
