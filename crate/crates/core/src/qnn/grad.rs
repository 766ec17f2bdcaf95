use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use super::circuit::{Buf, Circuit};
use super::model::{argmax, decode, loss_ce, softmax, PqcModel};
use crate::qsim::{NoiseConfig, QuantumState};
use crate::{Error, Result};

/// A labelled, already-encoded sample.
pub type Sample = (QuantumState, usize);

/// Per-qubit `<Z>` after running the model circuit on `input`.
pub fn forward(model: &PqcModel, input: &QuantumState, noise: &NoiseConfig) -> Result<Vec<f64>> {
    Circuit::new(model, noise)?.forward(input)
}

/// Like [`forward`], but each expectation is a finite-shot estimate.
pub fn forward_sampled<R: Rng + ?Sized>(
    model: &PqcModel,
    input: &QuantumState,
    noise: &NoiseConfig,
    shots: u32,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let c = Circuit::new(model, noise)?;
    let mut buf = c.prepare(input)?;
    c.run(&mut buf, 0, None, None);
    Ok(c.measure(&buf, Some(shots), rng))
}

/// Mean cross-entropy and accuracy of `model` over `samples` (exact expectations).
pub fn evaluate(model: &PqcModel, samples: &[Sample], noise: &NoiseConfig) -> Result<Evaluation> {
    if samples.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let c = Circuit::new(model, noise)?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, y) in samples {
        let logits = decode(&c.forward(x)?, model)?;
        loss += loss_ce(&logits, *y)?;
        if argmax(&logits) == *y {
            correct += 1;
        }
    }
    let n = samples.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct as f64 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

pub fn batch_loss(model: &PqcModel, batch: &[Sample], noise: &NoiseConfig) -> Result<f64> {
    Ok(evaluate(model, batch, noise)?.loss)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradOptions {
    /// Finite-shot measurement; `None` uses exact expectations.
    pub shots: Option<u32>,
    /// Noise sensitivity γ in the step weight `exp(-γ ‖ξ‖)`.
    pub noise_sensitivity: f64,
    /// Scale `c` of the configured noise surrogate `c·(γ_ad + p_pd)` used in exact mode.
    pub surrogate_scale: f64,
}

impl Default for GradOptions {
    fn default() -> Self {
        GradOptions {
            shots: None,
            noise_sensitivity: 0.0,
            surrogate_scale: 1.0,
        }
    }
}

/// Batch-mean gradient over the flat parameter vector together with the noise
/// estimate and the step weight derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub grad: Vec<f64>,
    pub xi_norm: f64,
    pub weight: f64,
    /// Mean cross-entropy of the batch at the current parameters.
    pub loss: f64,
}

impl GradientSample {
    pub fn new(grad: Vec<f64>, xi_norm: f64, noise_sensitivity: f64) -> Self {
        GradientSample {
            grad,
            xi_norm,
            weight: noise_weight(noise_sensitivity, xi_norm),
            loss: f64::NAN,
        }
    }
}

/// `exp(-γ ‖ξ‖)`.
pub fn noise_weight(noise_sensitivity: f64, xi_norm: f64) -> f64 {
    (-noise_sensitivity * xi_norm).exp()
}

/// Parameter-shift gradient of the batch-mean cross-entropy.
///
/// Circuit angles use `∂<Z_j>/∂θ = [f(θ+π/2) - f(θ-π/2)] / 2`, chained through the
/// decode head and softmax analytically. In shot mode the noise estimate is the norm
/// of the difference between two independent evaluations; in exact mode it is the
/// configured surrogate `c·(γ_ad + p_pd)` (zero for noiseless devices).
pub fn grad_parameter_shift<R: Rng + ?Sized>(
    model: &PqcModel,
    batch: &[Sample],
    noise: &NoiseConfig,
    opts: &GradOptions,
    rng: &mut R,
) -> Result<GradientSample> {
    if batch.is_empty() {
        return Err(Error::Empty("gradient batch"));
    }
    let circuit = Circuit::new(model, noise)?;
    let (grad, loss) = batch_gradient(&circuit, model, batch, opts.shots, rng)?;
    let xi_norm = match opts.shots {
        Some(_) => {
            let (other, _) = batch_gradient(&circuit, model, batch, opts.shots, rng)?;
            grad.iter()
                .zip(&other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        }
        None if noise.enabled => opts.surrogate_scale * (noise.gamma_ad + noise.p_pd),
        None => 0.0,
    };
    Ok(GradientSample {
        grad,
        xi_norm,
        weight: noise_weight(opts.noise_sensitivity, xi_norm),
        loss,
    })
}

fn batch_gradient<R: Rng + ?Sized>(
    circuit: &Circuit<'_>,
    model: &PqcModel,
    batch: &[Sample],
    shots: Option<u32>,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    let q = model.num_qubits();
    let c = model.num_classes();
    let n_angles = model.angle_count();
    let w_off = n_angles;
    let b_off = w_off + c * q;
    let mut grad = vec![0.0; model.param_count()];
    let mut loss = 0.0;
    let mut snapshots: Vec<Buf> = Vec::with_capacity(circuit.block_count());

    for (input, label) in batch {
        let mut buf = circuit.prepare(input)?;
        snapshots.clear();
        circuit.run(&mut buf, 0, None, Some(&mut snapshots));
        let e = circuit.measure(&buf, shots, rng);
        let logits = decode(&e, model)?;
        loss += loss_ce(&logits, *label)?;

        let mut dz = softmax(&logits);
        dz[*label] -= 1.0;
        let mut de = vec![0.0; q];
        for k in 0..c {
            grad[b_off + k] += dz[k];
            for j in 0..q {
                grad[w_off + k * q + j] += dz[k] * e[j];
                de[j] += model.weights()[k * q + j] * dz[k];
            }
        }
        if de.iter().all(|&d| d == 0.0) {
            continue;
        }
        if shots.is_none() && matches!(buf, Buf::Mixed(_)) {
            for (g, d) in grad.iter_mut().zip(circuit.adjoint_shift_gradient(&snapshots, &de)) {
                *g += d;
            }
            continue;
        }
        for i in 0..n_angles {
            if model.is_pruned(i) {
                continue;
            }
            let theta = model.angles()[i];
            let block = i / super::model::AXES;
            let mut plus = snapshots[block].clone();
            circuit.run(&mut plus, block, Some((i, theta + FRAC_PI_2)), None);
            let e_plus = circuit.measure(&plus, shots, rng);
            let mut minus = snapshots[block].clone();
            circuit.run(&mut minus, block, Some((i, theta - FRAC_PI_2)), None);
            let e_minus = circuit.measure(&minus, shots, rng);
            grad[i] += de
                .iter()
                .zip(e_plus.iter().zip(&e_minus))
                .map(|(d, (p, m))| d * (p - m) / 2.0)
                .sum::<f64>();
        }
    }
    let inv = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= inv);
    Ok((grad, loss * inv))
}

/// Raw `<Z>` derivative of qubit `qubit` w.r.t. every angle via parameter shift.
/// Exposed for checking the shift rule independently of the decode head.
pub fn expectation_gradient(
    model: &PqcModel,
    input: &QuantumState,
    noise: &NoiseConfig,
    qubit: usize,
) -> Result<Vec<f64>> {
    if qubit >= model.num_qubits() {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            num_qubits: model.num_qubits(),
        });
    }
    let circuit = Circuit::new(model, noise)?;
    (0..model.angle_count())
        .map(|i| {
            if model.is_pruned(i) {
                return Ok(0.0);
            }
            let theta = model.angles()[i];
            let eval = |shift: f64| -> Result<f64> {
                let mut buf = circuit.prepare(input)?;
                circuit.run(&mut buf, 0, Some((i, theta + shift)), None);
                Ok(circuit.expectations(&buf)[qubit])
            };
            Ok((eval(FRAC_PI_2)? - eval(-FRAC_PI_2)?) / 2.0)
        })
        .collect()
}
