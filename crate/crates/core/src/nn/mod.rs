//! Reverse-mode differentiation with gradient-of-gradient support, the
//! convolutional power regressor, optimizers, and checkpoint files.

mod checkpoint;
mod graph;
mod network;
mod optim;
mod tensor;

pub use checkpoint::{Checkpoint, CheckpointHeader, ManifestEntry, CHECKPOINT_VERSION};
pub use graph::{Graph, NodeId, PAD};
pub use network::{
    batch_loss, encode_batch, forward, label_tensor, loss_and_grads, mse_loss, output_to_power, BnBatchStats,
    ForwardOutput, InputTransform, Mode, Model, NetworkConfig, ParameterSet, RunningStats, Standardization,
};
pub use optim::{adam_step, adam_step_masked, sgd_step, AdamState};
pub use tensor::Tensor;
