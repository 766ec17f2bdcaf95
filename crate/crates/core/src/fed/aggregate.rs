//! Server-side aggregation rules and participant weighting.

use crate::qnn::PqcModel;
use crate::qsim::{trace_distance, QuantumState};
use crate::{Error, Result};

fn check_same_len(params: &[Vec<f64>]) -> Result<usize> {
    let first = params.first().ok_or(Error::Empty("client parameter list"))?;
    let n = first.len();
    if let Some(bad) = params.iter().position(|p| p.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "client {bad} has {} parameters, client 0 has {n}",
            params[bad].len()
        )));
    }
    Ok(n)
}

/// Elementwise arithmetic mean.
pub fn fedavg(params: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = check_same_len(params)?;
    let mut out = vec![0.0; n];
    for p in params {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    let k = params.len() as f64;
    out.iter_mut().for_each(|o| *o /= k);
    Ok(out)
}

/// Weighted mean `Σ w_i θ_i`, with weights already normalized.
pub fn weighted_average(params: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    let n = check_same_len(params)?;
    if weights.len() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} clients",
            weights.len(),
            params.len()
        )));
    }
    let mut out = vec![0.0; n];
    for (p, &w) in params.iter().zip(weights) {
        for (o, v) in out.iter_mut().zip(p) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// A client's parameters laid out in the global model's flat layout, with a mask of
/// which coordinates the client actually has.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedParams {
    pub values: Vec<f64>,
    pub present: Vec<bool>,
}

impl MaskedParams {
    pub fn full(values: Vec<f64>) -> Self {
        let present = vec![true; values.len()];
        MaskedParams { values, present }
    }
}

/// Embeds a `(q_i, L_i)` model into a `(q_g, L_g)` layout. Missing qubit rows and layers
/// are zero (identity rotations) and marked absent.
pub fn pad_params(model: &PqcModel, q_global: usize, l_global: usize) -> Result<MaskedParams> {
    if model.num_qubits() > q_global {
        return Err(Error::DimensionMismatch(format!(
            "client with {} qubits cannot be padded to {q_global}",
            model.num_qubits()
        )));
    }
    let idx = model.embedding_indices(q_global, l_global)?;
    let size = PqcModel::zeros(q_global, l_global, model.num_classes())?.param_count();
    let mut values = vec![0.0; size];
    let mut present = vec![false; size];
    for (&i, v) in idx.iter().zip(model.params()) {
        values[i] = v;
        present[i] = true;
    }
    Ok(MaskedParams { values, present })
}

/// Coordinate-wise `Σ w_i m_i θ_i / Σ w_i m_i`. Coordinates no weighted client holds
/// keep their value from `fallback`. Unit weights use a plain sum and count so that the
/// homogeneous case matches [`fedavg`] bit for bit.
pub fn masked_aggregate(
    clients: &[MaskedParams],
    weights: Option<&[f64]>,
    fallback: &[f64],
) -> Result<Vec<f64>> {
    if clients.is_empty() {
        return Err(Error::Empty("client parameter list"));
    }
    let n = fallback.len();
    if let Some(bad) = clients
        .iter()
        .position(|c| c.values.len() != n || c.present.len() != n)
    {
        return Err(Error::DimensionMismatch(format!(
            "client {bad} does not match the {n}-parameter global layout"
        )));
    }
    if let Some(w) = weights {
        if w.len() != clients.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} clients",
                w.len(),
                clients.len()
            )));
        }
    }
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for (i, c) in clients.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        for k in 0..n {
            if c.present[k] {
                if weights.is_some() {
                    num[k] += w * c.values[k];
                } else {
                    num[k] += c.values[k];
                }
                den[k] += w;
            }
        }
    }
    Ok((0..n)
        .map(|k| if den[k] > 0.0 { num[k] / den[k] } else { fallback[k] })
        .collect())
}

/// Layer-wise averaging for clients of different depths: layer `l` is averaged over the
/// clients that have it, the decode head over everyone. Each entry is a model's flat
/// parameters together with its depth; all models share qubit and class counts.
pub fn layerwise_aggregate(
    models: &[(Vec<f64>, usize)],
    num_qubits: usize,
    num_classes: usize,
) -> Result<Vec<f64>> {
    let l_max = models
        .iter()
        .map(|m| m.1)
        .max()
        .ok_or(Error::Empty("client parameter list"))?;
    let mut padded = Vec::with_capacity(models.len());
    for (i, (p, depth)) in models.iter().enumerate() {
        let mut m = PqcModel::zeros(num_qubits, *depth, num_classes)?;
        if p.len() != m.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "client {i}: {} parameters for a depth-{depth} model",
                p.len()
            )));
        }
        m.set_params(p)?;
        padded.push(pad_params(&m, num_qubits, l_max)?);
    }
    let fallback = vec![0.0; padded[0].values.len()];
    masked_aggregate(&padded, None, &fallback)
}

fn normalize(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / total).collect()
}

/// `softmax(-α · d(ρ_i, ρ_g))` with `d` the trace distance.
pub fn encoding_aware_weights(
    rhos: &[QuantumState],
    rho_global: &QuantumState,
    alpha: f64,
) -> Result<Vec<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            expected: "(0, inf)",
        });
    }
    if rhos.is_empty() {
        return Err(Error::Empty("client states"));
    }
    let d = rhos
        .iter()
        .map(|r| trace_distance(r, rho_global))
        .collect::<Result<Vec<_>>>()?;
    Ok(softmax_neg(&d, alpha))
}

/// `exp(-α d_i) / Σ exp(-α d_j)`, shifted by the minimum distance for stability.
pub fn softmax_neg(distances: &[f64], alpha: f64) -> Vec<f64> {
    let d_min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    normalize(
        distances
            .iter()
            .map(|d| (-alpha * (d - d_min)).exp())
            .collect(),
    )
}

/// Capacity weights `q_i φ_i / Σ q_j φ_j`.
pub fn fairness_weights(clients: &[(usize, f64)]) -> Result<Vec<f64>> {
    if clients.is_empty() {
        return Err(Error::Empty("client list"));
    }
    for &(_, phi) in clients {
        if !(0.0..=1.0).contains(&phi) {
            return Err(Error::OutOfRange {
                name: "phi",
                value: phi,
                expected: "[0, 1]",
            });
        }
    }
    let raw: Vec<f64> = clients.iter().map(|&(q, phi)| q as f64 * phi).collect();
    if raw.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Infeasible("every client has zero capacity".into()));
    }
    Ok(normalize(raw))
}

/// Inverse-variance weights. Clients with `σ² = 0` are exact: they share all the weight
/// equally and everyone else gets zero.
pub fn inverse_variance_weights(sigma_sq: &[f64]) -> Result<Vec<f64>> {
    if sigma_sq.is_empty() {
        return Err(Error::Empty("client list"));
    }
    if let Some(&bad) = sigma_sq.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
        return Err(Error::OutOfRange {
            name: "sigma_sq",
            value: bad,
            expected: "[0, inf)",
        });
    }
    if sigma_sq.iter().any(|&s| s == 0.0) {
        return Ok(normalize(
            sigma_sq.iter().map(|&s| if s == 0.0 { 1.0 } else { 0.0 }).collect(),
        ));
    }
    Ok(normalize(sigma_sq.iter().map(|s| 1.0 / s).collect()))
}

/// `Σ(θ_i/σ_i²) / Σ(1/σ_i²)`; see [`inverse_variance_weights`] for `σ² = 0`.
pub fn noise_aware_aggregate(params: &[Vec<f64>], sigma_sq: &[f64]) -> Result<Vec<f64>> {
    check_same_len(params)?;
    if sigma_sq.len() != params.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} variances for {} clients",
            sigma_sq.len(),
            params.len()
        )));
    }
    let w = inverse_variance_weights(sigma_sq)?;
    weighted_average(params, &w)
}

/// Indices of clients with `A_i ≥ τ`.
pub fn sporadic_select(accuracies: &[f64], tau: f64) -> Vec<usize> {
    accuracies
        .iter()
        .enumerate()
        .filter(|(_, &a)| a >= tau)
        .map(|(i, _)| i)
        .collect()
}
