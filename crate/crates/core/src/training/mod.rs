//! Losses, optimizers and the training loop.

mod loss;
mod optim;
mod train;

pub use loss::{bce_grad, bce_loss, mse_loss, predict, probability, Loss, BCE_EPS};
pub use optim::{adam_step, nesterov_step, OptimizerConfig, OptimizerState};
pub use train::{
    evaluate, train, Curves, Dataset, FinalMetrics, RunReport, Sample, TrainConfig, TrainReport,
};
