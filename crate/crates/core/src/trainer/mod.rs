//! Feed-forward trainer: model, losses, optimizers, schedules,
//! augmentations and metrics.

pub mod augment;
pub mod dataset;
pub mod epoch;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod schedule;

pub use augment::{augment, augment_all};
pub use dataset::{Dataset, ImageShape, Standardization};
pub use epoch::{evaluate, train_epoch, EpochMetrics, Evaluation};
pub use loss::{evaluation_loss, loss_and_grad, softmax};
pub use metrics::{compute_metrics, roc_auc, MetricSet};
pub use model::{build_model, Gradients, LayerParams, MlpModel};
pub use optim::{optimizer_step, OptimizerState};
pub use schedule::scheduled_lr;

use crate::space::AugMethod;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("augmentation `{method}` needs image-shaped features, but the dataset is tabular")]
    NotApplicable { method: AugMethod },
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
}
