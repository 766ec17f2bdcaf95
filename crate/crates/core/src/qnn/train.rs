use rand::seq::index::sample;
use rand::Rng;

use super::grad::{grad_parameter_shift, GradOptions, Sample};
use super::model::PqcModel;
use super::optim::{adam_step, local_update_spqfl, OptimizerKind, TrainerState};
use crate::qsim::NoiseConfig;
use crate::{Error, Result};

/// Outcome of one client's local training.
#[derive(Debug, Clone)]
pub struct LocalRun {
    pub model: PqcModel,
    /// Mean mini-batch loss over the local steps.
    pub mean_loss: f64,
    /// Mean noise-aware step weight over the local steps.
    pub mean_weight: f64,
}

/// `steps` mini-batch updates starting from `model`, regularized toward `anchor`
/// (the flat global parameters broadcast at the start of the round).
#[allow(clippy::too_many_arguments)]
pub fn train_local<R: Rng + ?Sized>(
    model: &PqcModel,
    anchor: &[f64],
    data: &[Sample],
    steps: usize,
    batch_size: usize,
    trainer: &mut TrainerState,
    noise: &NoiseConfig,
    grad_opts: &GradOptions,
    rng: &mut R,
) -> Result<LocalRun> {
    if data.is_empty() {
        return Err(Error::Empty("local training set"));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    let mut model = model.clone();
    let mut omega = model.params();
    let mut loss_sum = 0.0;
    let mut weight_sum = 0.0;
    let mut batch: Vec<Sample> = Vec::with_capacity(batch_size.min(data.len()));
    for _ in 0..steps {
        batch.clear();
        let take = batch_size.min(data.len());
        for i in sample(rng, data.len(), take) {
            batch.push(data[i].clone());
        }
        let g = grad_parameter_shift(&model, &batch, noise, grad_opts, rng)?;
        loss_sum += g.loss;
        weight_sum += g.weight;
        omega = match trainer.optimizer {
            OptimizerKind::Sgd => local_update_spqfl(&omega, &g, anchor, trainer)?,
            OptimizerKind::Adam => adam_step(&omega, &g.grad, anchor, g.weight, trainer)?,
        };
        model.set_params(&omega)?;
        omega = model.params();
    }
    let n = steps.max(1) as f64;
    Ok(LocalRun {
        model,
        mean_loss: if steps == 0 { f64::NAN } else { loss_sum / n },
        mean_weight: if steps == 0 { 1.0 } else { weight_sum / n },
    })
}
