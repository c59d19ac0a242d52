//! Offline strategies: joint training, transfer learning by fine-tuning the
//! output layer, and meta-learning with second-order inner-loop gradients.

mod config;
mod metrics;
mod trainers;

pub use config::{OuterOptimizer, TrainConfig};
pub use metrics::{MetricRow, MetricsLog};
pub use trainers::{
    dataset_loss, evaluate, evaluate_with, fine_tune, initial_model, meta_adapt, meta_outer_gradient, meta_train,
    pretrain, task_meta_gradient, train_joint, weighted_outer_gradient, EvalReport, OuterGradient,
};
pub(crate) use trainers::{outer_update, worker_pool};
