//! Regression and adversarial objectives, the alternating training loop and
//! the sync/off-sync classifier.

mod batch;
mod losses;
mod metrics;
mod step;
mod sync;

pub use batch::Batch;
pub use losses::{adversarial_losses, regression_loss, AdversarialLosses, LossWeights, RegressionTerms};
pub use metrics::{write_metrics_csv, StepMetrics, METRICS_HEADER};
pub use step::{train, train_step, TrainConfig, TrainingLog};
pub use sync::{train_sync_classifier, SyncConfig, SyncOutcome, SYNC_WINDOW_LENGTHS};
