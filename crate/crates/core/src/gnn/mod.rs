//! Two-layer graph convolutional classifier trained on cross-entropy plus a
//! coreset similarity-parity penalty, with hand-derived gradients.
//!
//! The fairness term is evaluated on the final-layer embeddings `H2` of the
//! coreset nodes, so it acts on what neighborhood aggregation produces.

mod backward;
mod forward;
mod loss;
mod params;
mod train;

pub use backward::{evaluate, gradients, LossValues, Objective};
pub use forward::{forward, predictions, softmax_rows, ForwardPass};
pub use loss::{
    fairness_loss, task_loss, total_loss, weighted_task_loss, FairnessLoss, PROB_FLOOR,
};
pub use params::{ModelDims, ModelParams};
pub use train::{
    train, train_lr_grid, train_with_operator, EpochRecord, TrainConfig, TrainHistory,
    TrainOutcome, LR_GRID,
};
