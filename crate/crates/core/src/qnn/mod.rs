//! Parameterized quantum circuit classifier: forward pass, parameter-shift gradients,
//! personalized local updates, Adam, gate pruning and checkpoints.

mod checkpoint;
mod circuit;
mod grad;
mod model;
mod optim;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use grad::{
    batch_loss, evaluate, expectation_gradient, forward, forward_sampled, grad_parameter_shift,
    noise_weight, Evaluation, GradOptions, GradientSample, Sample,
};
pub use model::{argmax, build_pqc, decode, loss_ce, prune_gates, softmax, PqcModel, AXES};
pub use optim::{
    adam_learning_rate, adam_step, local_update_spqfl, OptimizerKind, TrainerState,
    DEFAULT_LEARNING_RATE, LR_DECAY, LR_DECAY_EVERY,
};
pub use train::{train_local, LocalRun};
