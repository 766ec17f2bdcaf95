use serde::{Deserialize, Serialize};

use super::grad::GradientSample;
use crate::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const DEFAULT_LEARNING_RATE: f64 = 0.001;
/// Adam learning rate is multiplied by this factor once every `LR_DECAY_EVERY` rounds.
pub const LR_DECAY: f64 = 0.9;
pub const LR_DECAY_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Personalized SGD step `ω - η·x·(g + λ(ω - ω_g))`.
    #[default]
    Sgd,
    Adam,
}

/// Local optimizer state for one client within one round.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub eta: f64,
    pub lambda: f64,
    pub gamma_ns: f64,
    pub optimizer: OptimizerKind,
    /// Global round index, drives the Adam learning-rate schedule.
    pub round: usize,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl TrainerState {
    pub fn new(eta: f64, lambda: f64, gamma_ns: f64, optimizer: OptimizerKind) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::OutOfRange {
                name: "eta",
                value: eta,
                expected: "(0, inf)",
            });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::OutOfRange {
                name: "lambda",
                value: lambda,
                expected: "[0, inf)",
            });
        }
        if !(gamma_ns >= 0.0) || !gamma_ns.is_finite() {
            return Err(Error::OutOfRange {
                name: "gamma_ns",
                value: gamma_ns,
                expected: "[0, inf)",
            });
        }
        Ok(TrainerState {
            eta,
            lambda,
            gamma_ns,
            optimizer,
            round: 0,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        })
    }

    pub fn at_round(mut self, round: usize) -> Self {
        self.round = round;
        self
    }

    /// `η · 0.9^⌊round/10⌋` for Adam; the constant `η` for SGD.
    pub fn learning_rate(&self) -> f64 {
        match self.optimizer {
            OptimizerKind::Sgd => self.eta,
            OptimizerKind::Adam => adam_learning_rate(self.eta, self.round),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

pub fn adam_learning_rate(base: f64, round: usize) -> f64 {
    base * LR_DECAY.powi((round / LR_DECAY_EVERY) as i32)
}

fn check_shapes(omega: &[f64], grad: &[f64], omega_global: &[f64]) -> Result<()> {
    if omega.len() != grad.len() || omega.len() != omega_global.len() {
        return Err(Error::DimensionMismatch(format!(
            "parameters {}, gradient {}, global {}",
            omega.len(),
            grad.len(),
            omega_global.len()
        )));
    }
    Ok(())
}

/// `ω' = ω − η·x·(g + λ(ω − ω_g))` with `x` the gradient's noise-aware weight.
pub fn local_update_spqfl(
    omega: &[f64],
    grad: &GradientSample,
    omega_global: &[f64],
    trainer: &TrainerState,
) -> Result<Vec<f64>> {
    check_shapes(omega, &grad.grad, omega_global)?;
    let eta = trainer.eta;
    let x = grad.weight;
    let lambda = trainer.lambda;
    Ok(omega
        .iter()
        .zip(&grad.grad)
        .zip(omega_global)
        .map(|((w, g), wg)| w - eta * x * (g + lambda * (w - wg)))
        .collect())
}

/// One Adam step on `g + λ(ω − ω_g)`, scaled by the noise-aware weight `x`.
pub fn adam_step(
    omega: &[f64],
    grad: &[f64],
    omega_global: &[f64],
    weight: f64,
    trainer: &mut TrainerState,
) -> Result<Vec<f64>> {
    check_shapes(omega, grad, omega_global)?;
    if trainer.m.len() != omega.len() {
        trainer.m = vec![0.0; omega.len()];
        trainer.v = vec![0.0; omega.len()];
        trainer.step = 0;
    }
    trainer.step += 1;
    let t = trainer.step as i32;
    let lr = adam_learning_rate(trainer.eta, trainer.round);
    let bc1 = 1.0 - ADAM_BETA1.powi(t);
    let bc2 = 1.0 - ADAM_BETA2.powi(t);
    let lambda = trainer.lambda;
    let mut out = Vec::with_capacity(omega.len());
    for i in 0..omega.len() {
        let g = grad[i] + lambda * (omega[i] - omega_global[i]);
        trainer.m[i] = ADAM_BETA1 * trainer.m[i] + (1.0 - ADAM_BETA1) * g;
        trainer.v[i] = ADAM_BETA2 * trainer.v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = trainer.m[i] / bc1;
        let v_hat = trainer.v[i] / bc2;
        out.push(omega[i] - weight * lr * m_hat / (v_hat.sqrt() + ADAM_EPS));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grad: Vec<f64>, weight: f64) -> GradientSample {
        GradientSample {
            grad,
            xi_norm: 0.0,
            weight,
            loss: 0.0,
        }
    }

    #[test]
    fn spqfl_degenerates_to_sgd() {
        let t = TrainerState::new(0.1, 0.0, 0.0, OptimizerKind::Sgd).unwrap();
        let w = vec![0.3, -1.2, 4.0];
        let g = vec![0.5, 0.25, -1.0];
        let out = local_update_spqfl(&w, &sample(g.clone(), 1.0), &[9.0, 9.0, 9.0], &t).unwrap();
        let sgd: Vec<f64> = w.iter().zip(&g).map(|(w, g)| w - 0.1 * g).collect();
        assert_eq!(out, sgd);
    }

    #[test]
    fn spqfl_fixed_point() {
        let t = TrainerState::new(0.1, 0.7, 0.0, OptimizerKind::Sgd).unwrap();
        let w = vec![0.3, -1.2];
        let out = local_update_spqfl(&w, &sample(vec![0.0, 0.0], 1.0), &w, &t).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn spqfl_scalar_case() {
        let t = TrainerState::new(0.1, 0.1, 0.0, OptimizerKind::Sgd).unwrap();
        let out = local_update_spqfl(&[1.0], &sample(vec![0.5], 1.0), &[0.0], &t).unwrap();
        assert_eq!(out, vec![0.94]);
    }

    #[test]
    fn shape_mismatch() {
        let t = TrainerState::new(0.1, 0.1, 0.0, OptimizerKind::Sgd).unwrap();
        assert!(local_update_spqfl(&[1.0], &sample(vec![0.5, 1.0], 1.0), &[0.0], &t).is_err());
        let mut t = t;
        assert!(adam_step(&[1.0], &[0.5], &[0.0, 1.0], 1.0, &mut t).is_err());
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut t = TrainerState::new(0.001, 0.0, 0.0, OptimizerKind::Adam).unwrap();
        let w = vec![0.4, -0.2];
        assert_eq!(adam_step(&w, &[0.0, 0.0], &[0.0, 0.0], 1.0, &mut t).unwrap(), w);
    }

    #[test]
    fn adam_first_step_magnitude() {
        let mut t = TrainerState::new(0.001, 0.0, 0.0, OptimizerKind::Adam).unwrap();
        let w = vec![0.4, -0.2, 1.0];
        let out = adam_step(&w, &[3.0, -1e-3, 42.0], &[0.0; 3], 1.0, &mut t).unwrap();
        for (a, b) in out.iter().zip(&w) {
            let d = (a - b).abs();
            assert!(d <= 0.001 * (1.0 + 1e-8));
            assert!(d > 0.001 * 0.99);
        }
    }

    #[test]
    fn adam_schedule() {
        let t9 = TrainerState::new(0.001, 0.0, 0.0, OptimizerKind::Adam)
            .unwrap()
            .at_round(9);
        let t10 = t9.clone().at_round(10);
        let t0 = t9.clone().at_round(0);
        assert!((t10.learning_rate() / t9.learning_rate() - 0.9).abs() < 1e-12);
        assert!((t10.learning_rate() / t0.learning_rate() - 0.9).abs() < 1e-12);
        assert!((t0.clone().at_round(25).learning_rate() - 0.001 * 0.81).abs() < 1e-15);
    }

    #[test]
    fn trainer_validation() {
        assert!(TrainerState::new(0.0, 0.1, 0.0, OptimizerKind::Sgd).is_err());
        assert!(TrainerState::new(0.1, -0.1, 0.0, OptimizerKind::Sgd).is_err());
        assert!(TrainerState::new(0.1, 0.1, -1.0, OptimizerKind::Sgd).is_err());
    }
}
