mod config;
mod model;
mod training;


pub use config::{Baseline, BaselineKind, PepConfig, PepOptions, TrainingPolicy};
pub use model::{ModelKernel, NigParams, ReducedDraw, StudentPredictive, Workspace};
pub use training::{make_training_design, training_rows, TrainingDesign, MAX_TRAINING_DRAWS};
