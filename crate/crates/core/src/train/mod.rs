//! Losses, metrics, the optimizer, the training loop and the loss-reduction
//! ratio.

mod adam;
mod loss;
mod metrics;
mod ratio;
mod trainer;

pub use adam::{AdamError, AdamState};
pub use loss::{mae, masked_bce_loss, masked_mse_loss, mse, task_loss, task_loss_value, LossError};
pub use metrics::{masked_mae, mean_task_auc, roc_auc, MetricError};
pub use ratio::{loss_reduction_ratio, pair_ratios, RatioError};
pub use trainer::{train_loop, EpochRecord, Prepared, RunRecord, RunSummary, TrainConfig, TrainError, TrainOutcome};
