use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::seed::rng_for;
use crate::{Error, Result};

/// Rotation axes applied to every qubit in every layer, in execution order.
pub const AXES: usize = 3;

/// Layered PQC (RX, RY, RZ on every qubit, then a CNOT ring) followed by a linear
/// decode head mapping per-qubit `<Z>` values to class logits.
///
/// Flat parameter layout: `angles[L][q][3]`, then `weights[C][q]`, then `bias[C]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqcModel {
    num_qubits: usize,
    num_layers: usize,
    num_classes: usize,
    angles: Vec<f64>,
    pruned: Vec<bool>,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Angles uniform in `[-π, π]` from `seed`, zero decode head.
pub fn build_pqc(
    num_qubits: usize,
    num_layers: usize,
    num_classes: usize,
    seed: u64,
) -> Result<PqcModel> {
    let mut model = PqcModel::zeros(num_qubits, num_layers, num_classes)?;
    let mut rng = rng_for(&[seed, 0x9C]);
    for a in &mut model.angles {
        *a = rng.gen_range(-PI..=PI);
    }
    Ok(model)
}

impl PqcModel {
    pub fn zeros(num_qubits: usize, num_layers: usize, num_classes: usize) -> Result<Self> {
        if num_qubits == 0 || num_layers == 0 || num_classes == 0 {
            return Err(Error::Config(format!(
                "model needs q >= 1, L >= 1, C >= 1 (got q={num_qubits}, L={num_layers}, C={num_classes})"
            )));
        }
        let n_angles = num_layers * num_qubits * AXES;
        Ok(PqcModel {
            num_qubits,
            num_layers,
            num_classes,
            angles: vec![0.0; n_angles],
            pruned: vec![false; n_angles],
            weights: vec![0.0; num_classes * num_qubits],
            bias: vec![0.0; num_classes],
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn angle_count(&self) -> usize {
        self.angles.len()
    }

    pub fn param_count(&self) -> usize {
        self.angles.len() + self.weights.len() + self.bias.len()
    }

    pub fn angle_index(&self, layer: usize, qubit: usize, axis: usize) -> usize {
        (layer * self.num_qubits + qubit) * AXES + axis
    }

    pub fn angle(&self, layer: usize, qubit: usize, axis: usize) -> f64 {
        self.angles[self.angle_index(layer, qubit, axis)]
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn pruned(&self) -> &[bool] {
        &self.pruned
    }

    pub fn is_pruned(&self, index: usize) -> bool {
        self.pruned[index]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn set_angle(&mut self, layer: usize, qubit: usize, axis: usize, value: f64) {
        let i = self.angle_index(layer, qubit, axis);
        self.angles[i] = value;
    }

    pub fn set_decode(&mut self, weights: Vec<f64>, bias: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() || bias.len() != self.bias.len() {
            return Err(Error::DimensionMismatch(format!(
                "decode head expects {}x{} weights and {} biases",
                self.num_classes, self.num_qubits, self.num_classes
            )));
        }
        self.weights = weights;
        self.bias = bias;
        Ok(())
    }

    /// CNOT ring `i -> (i+1) mod q`, empty for a single qubit.
    pub fn cnot_pairs(&self) -> Vec<(usize, usize)> {
        if self.num_qubits < 2 {
            return Vec::new();
        }
        (0..self.num_qubits)
            .map(|i| (i, (i + 1) % self.num_qubits))
            .collect()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.angles);
        p.extend_from_slice(&self.weights);
        p.extend_from_slice(&self.bias);
        p
    }

    /// Loads a flat parameter vector. Pruned angles stay at zero.
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameters for a model with {}",
                params.len(),
                self.param_count()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidState("non-finite model parameter".into()));
        }
        let (a, rest) = params.split_at(self.angles.len());
        let (w, b) = rest.split_at(self.weights.len());
        self.angles.copy_from_slice(a);
        self.weights.copy_from_slice(w);
        self.bias.copy_from_slice(b);
        for (angle, &p) in self.angles.iter_mut().zip(&self.pruned) {
            if p {
                *angle = 0.0;
            }
        }
        Ok(())
    }

    /// Leading `num_qubits` x `num_layers` sub-model: the first layers, the first qubit
    /// rows of each layer and the matching decode-head columns.
    pub fn restrict(&self, num_qubits: usize, num_layers: usize) -> Result<PqcModel> {
        if num_qubits > self.num_qubits || num_layers > self.num_layers {
            return Err(Error::DimensionMismatch(format!(
                "cannot restrict a {}x{} model to {num_qubits}x{num_layers}",
                self.num_qubits, self.num_layers
            )));
        }
        let mut out = PqcModel::zeros(num_qubits, num_layers, self.num_classes)?;
        for l in 0..num_layers {
            for j in 0..num_qubits {
                for a in 0..AXES {
                    let src = self.angle_index(l, j, a);
                    let dst = out.angle_index(l, j, a);
                    out.angles[dst] = self.angles[src];
                    out.pruned[dst] = self.pruned[src];
                }
            }
        }
        for c in 0..self.num_classes {
            for j in 0..num_qubits {
                out.weights[c * num_qubits + j] = self.weights[c * self.num_qubits + j];
            }
        }
        out.bias.copy_from_slice(&self.bias);
        Ok(out)
    }

    /// Index in a `(q_global, l_global)` model's flat vector of each of this model's
    /// parameters, for embedding a smaller model into the global layout.
    pub fn embedding_indices(&self, q_global: usize, l_global: usize) -> Result<Vec<usize>> {
        if q_global < self.num_qubits || l_global < self.num_layers {
            return Err(Error::DimensionMismatch(format!(
                "a {}x{} model does not fit in {q_global}x{l_global}",
                self.num_qubits, self.num_layers
            )));
        }
        let mut idx = Vec::with_capacity(self.param_count());
        for l in 0..self.num_layers {
            for j in 0..self.num_qubits {
                for a in 0..AXES {
                    idx.push((l * q_global + j) * AXES + a);
                }
            }
        }
        let w0 = l_global * q_global * AXES;
        for c in 0..self.num_classes {
            for j in 0..self.num_qubits {
                idx.push(w0 + c * q_global + j);
            }
        }
        let b0 = w0 + self.num_classes * q_global;
        idx.extend((0..self.num_classes).map(|c| b0 + c));
        Ok(idx)
    }

    /// Gates whose `|θ| < ε` are zeroed and skipped at execution.
    pub fn prune(&mut self, epsilon: f64) {
        for (a, p) in self.angles.iter_mut().zip(self.pruned.iter_mut()) {
            if a.abs() < epsilon {
                *a = 0.0;
                *p = true;
            }
        }
    }

    pub fn pruned_count(&self) -> usize {
        self.pruned.iter().filter(|&&p| p).count()
    }

    pub(crate) fn from_raw(
        num_qubits: usize,
        num_layers: usize,
        num_classes: usize,
        angles: Vec<f64>,
        pruned: Vec<bool>,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let mut m = PqcModel::zeros(num_qubits, num_layers, num_classes)?;
        if angles.len() != m.angles.len()
            || pruned.len() != m.pruned.len()
            || weights.len() != m.weights.len()
            || bias.len() != m.bias.len()
        {
            return Err(Error::DimensionMismatch("inconsistent model buffers".into()));
        }
        m.pruned = pruned;
        let mut p = angles;
        p.extend(weights);
        p.extend(bias);
        m.set_params(&p)?;
        Ok(m)
    }
}

/// Returns a copy of `model` with small rotations pruned; the tensor shape is unchanged.
pub fn prune_gates(model: &PqcModel, epsilon: f64) -> PqcModel {
    let mut m = model.clone();
    m.prune(epsilon);
    m
}

/// `logits = W · expectations + b`.
pub fn decode(expectations: &[f64], model: &PqcModel) -> Result<Vec<f64>> {
    let q = model.num_qubits();
    if expectations.len() != q {
        return Err(Error::DimensionMismatch(format!(
            "{} expectations for a {q}-qubit decode head",
            expectations.len()
        )));
    }
    Ok(model
        .weights
        .chunks(q)
        .zip(&model.bias)
        .map(|(row, b)| row.iter().zip(expectations).map(|(w, e)| w * e).sum::<f64>() + b)
        .collect())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[label]`, computed with log-sum-exp.
pub fn loss_ce(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::InvalidLabel {
            label,
            num_classes: logits.len(),
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    Ok((lse - logits[label]).max(0.0))
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn build_is_deterministic() {
        let a = build_pqc(3, 2, 4, 11).unwrap();
        let b = build_pqc(3, 2, 4, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_pqc(3, 2, 4, 12).unwrap());
        assert!(a.angles().iter().all(|x| x.abs() <= PI));
        assert!(a.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn build_shapes() {
        assert!(build_pqc(1, 2, 2, 0).unwrap().cnot_pairs().is_empty());
        let m = build_pqc(4, 3, 2, 0).unwrap();
        assert_eq!(m.angle_count(), 36);
        assert_eq!(m.cnot_pairs(), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(build_pqc(0, 1, 2, 0).is_err());
    }

    #[test]
    fn decode_examples() {
        let mut m = PqcModel::zeros(2, 1, 2).unwrap();
        assert_eq!(decode(&[0.3, -0.2], &m).unwrap(), vec![0.0, 0.0]);
        m.set_decode(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(decode(&[0.3, -0.2], &m).unwrap(), vec![0.3, -0.2]);

        let mut m = PqcModel::zeros(2, 1, 1).unwrap();
        m.set_decode(vec![1.0, -1.0], vec![0.5]).unwrap();
        assert_eq!(decode(&[1.0, -1.0], &m).unwrap(), vec![2.5]);
        assert!(decode(&[1.0], &m).is_err());
    }

    #[test]
    fn loss_examples() {
        assert!((loss_ce(&[0.0, 0.0], 0).unwrap() - LN_2).abs() < 1e-15);
        assert!((loss_ce(&[0.0, 0.0], 1).unwrap() - 0.69315).abs() < 1e-5);
        assert!(loss_ce(&[100.0, 0.0], 0).unwrap() < 1e-40);
        let c = 7;
        assert!((loss_ce(&vec![1.3; c], 3).unwrap() - (c as f64).ln()).abs() < 1e-14);
        assert!(matches!(
            loss_ce(&[0.0, 0.0], 2),
            Err(Error::InvalidLabel { .. })
        ));
    }

    #[test]
    fn prune_examples() {
        let m = build_pqc(2, 2, 2, 5).unwrap();
        assert_eq!(prune_gates(&m, 0.0), m);

        let all = prune_gates(&m, 10.0);
        assert!(all.angles().iter().all(|&a| a == 0.0));
        assert_eq!(all.pruned_count(), all.angle_count());

        let mut m = PqcModel::zeros(1, 1, 2).unwrap();
        m.set_angle(0, 0, 0, 0.001);
        m.set_angle(0, 0, 1, 1.0);
        let p = prune_gates(&m, 0.01);
        assert_eq!(&p.angles()[..2], &[0.0, 1.0]);
        assert_eq!(p.angle_count(), m.angle_count());
    }

    #[test]
    fn restrict_and_embed_agree() {
        let big = build_pqc(3, 3, 2, 9).unwrap();
        let small = big.restrict(2, 2).unwrap();
        let idx = small.embedding_indices(3, 3).unwrap();
        let bp = big.params();
        for (v, i) in small.params().iter().zip(&idx) {
            assert_eq!(*v, bp[*i]);
        }
        assert!(big.restrict(4, 1).is_err());
    }
}
