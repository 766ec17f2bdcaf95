//! Classical-to-quantum encoders, feature standardization, qubit padding and
//! per-client encoded-state summaries.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qsim::{apply_gate, Gate, QuantumState, Repr};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Basis,
    Amplitude,
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    L2,
    ZscoreThenL2,
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const CONSTANT_COLUMN: f64 = 1e-12;

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::Empty("dataset"))?;
        let d = first.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch("ragged feature rows".into()));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Standardizer { mean, std })
    }

    /// Constant columns (zero variance) map to zero.
    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| if *s > CONSTANT_COLUMN { (x - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.mean.len() {
                    Err(Error::DimensionMismatch(format!(
                        "row of length {} for a {}-feature standardizer",
                        r.len(),
                        self.mean.len()
                    )))
                } else {
                    Ok(self.apply_row(r))
                }
            })
            .collect()
    }
}

/// Zero-mean, unit-variance columns using population statistics.
pub fn standardize(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    Standardizer::fit(rows)?.apply(rows)
}

/// Normalized amplitudes of `x`, zero-padded to `2^q`.
pub fn amplitude_encode(x: &[f64], num_qubits: usize) -> Result<QuantumState> {
    if num_qubits == 0 || num_qubits > 24 {
        return Err(Error::DimensionMismatch(format!(
            "unsupported qubit count {num_qubits}"
        )));
    }
    let dim = 1usize << num_qubits;
    if x.len() > dim {
        return Err(Error::DimensionMismatch(format!(
            "{} features do not fit in {num_qubits} qubits",
            x.len()
        )));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidState(
            "cannot amplitude-encode a zero or non-finite vector".into(),
        ));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for (a, v) in amps.iter_mut().zip(x) {
        *a = Complex64::new(v / norm, 0.0);
    }
    Ok(QuantumState::from_parts_unchecked(num_qubits, Repr::Pure(amps)))
}

/// Computational basis state `|b0 b1 ...>` with `b0` on qubit 0.
pub fn basis_encode(bits: &[u8]) -> Result<QuantumState> {
    if bits.is_empty() {
        return Err(Error::Empty("bit vector"));
    }
    let mut index = 0usize;
    for &b in bits {
        if b > 1 {
            return Err(Error::InvalidState(format!("non-binary entry {b}")));
        }
        index = (index << 1) | b as usize;
    }
    QuantumState::basis(bits.len(), index)
}

/// One `RY(x_j)` on qubit `j`; applied to `|0...0>` each qubit becomes
/// `cos(x_j/2)|0> + sin(x_j/2)|1>`.
pub fn angle_encode(x: &[f64], num_qubits: usize) -> Result<Vec<Gate>> {
    if x.len() > num_qubits {
        return Err(Error::DimensionMismatch(format!(
            "{} angles for {num_qubits} qubits",
            x.len()
        )));
    }
    Ok(x.iter().enumerate().map(|(j, &a)| Gate::ry(j, a)).collect())
}

/// Embeds a `q_i`-qubit state into `q_global` qubits by appending `|0>` ancillas as the
/// least-significant qubits.
pub fn pad_to_qubits(state: &QuantumState, q_global: usize) -> Result<QuantumState> {
    let q = state.num_qubits();
    if q_global < q {
        return Err(Error::DimensionMismatch(format!(
            "cannot pad a {q}-qubit state down to {q_global} qubits"
        )));
    }
    let shift = q_global - q;
    if shift == 0 {
        return Ok(state.clone());
    }
    let big = 1usize << q_global;
    let zero = Complex64::new(0.0, 0.0);
    let repr = match state.repr() {
        Repr::Pure(a) => {
            let mut out = vec![zero; big];
            for (i, v) in a.iter().enumerate() {
                out[i << shift] = *v;
            }
            Repr::Pure(out)
        }
        Repr::Mixed(r) => {
            let small = state.dim();
            let mut out = vec![zero; big * big];
            for i in 0..small {
                for j in 0..small {
                    out[(i << shift) * big + (j << shift)] = r[i * small + j];
                }
            }
            Repr::Mixed(out)
        }
    };
    Ok(QuantumState::from_parts_unchecked(q_global, repr))
}

/// Block-averages `x` down to at most `len` entries. Used when a client has fewer
/// qubits than the feature vector needs.
pub fn pool_features(x: &[f64], len: usize) -> Vec<f64> {
    if x.len() <= len || len == 0 {
        return x.to_vec();
    }
    let chunk = x.len().div_ceil(len);
    x.chunks(chunk)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    kind: EncoderKind,
    num_qubits: usize,
    standardizer: Option<Standardizer>,
}

impl Encoder {
    pub fn new(kind: EncoderKind, num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::DimensionMismatch("encoder needs at least one qubit".into()));
        }
        Ok(Encoder {
            kind,
            num_qubits,
            standardizer: None,
        })
    }

    /// Standardize each sample with fitted statistics before the L2 normalization.
    pub fn with_standardizer(mut self, s: Standardizer) -> Self {
        self.standardizer = Some(s);
        self
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn normalization(&self) -> Normalization {
        if self.standardizer.is_some() {
            Normalization::ZscoreThenL2
        } else {
            Normalization::L2
        }
    }

    pub fn feature_capacity(&self) -> usize {
        match self.kind {
            EncoderKind::Amplitude => 1 << self.num_qubits,
            EncoderKind::Angle | EncoderKind::Basis => self.num_qubits,
        }
    }

    /// Encodes one sample. Basis encoding sets bit `j` when `x_j > 0`.
    pub fn encode(&self, x: &[f64]) -> Result<QuantumState> {
        let owned;
        let x = match &self.standardizer {
            Some(s) => {
                owned = s.apply_row(x);
                &owned[..]
            }
            None => x,
        };
        if x.len() > self.feature_capacity() {
            return Err(Error::DimensionMismatch(format!(
                "{} features exceed {:?} capacity {}",
                x.len(),
                self.kind,
                self.feature_capacity()
            )));
        }
        match self.kind {
            EncoderKind::Amplitude => amplitude_encode(x, self.num_qubits),
            EncoderKind::Angle => {
                let mut s = QuantumState::zero(self.num_qubits);
                for g in angle_encode(x, self.num_qubits)? {
                    s = apply_gate(&s, &g)?;
                }
                Ok(s)
            }
            EncoderKind::Basis => {
                let mut bits = vec![0u8; self.num_qubits];
                for (b, v) in bits.iter_mut().zip(x) {
                    *b = u8::from(*v > 0.0);
                }
                basis_encode(&bits)
            }
        }
    }
}

/// Uniform mixture of the encoded states of the first `min(m, sample_cap)` samples.
pub fn client_state_summary(
    shard: &[Vec<f64>],
    enc: &Encoder,
    sample_cap: usize,
) -> Result<QuantumState> {
    let take = shard.len().min(sample_cap);
    if take == 0 {
        return Err(Error::Empty("client shard"));
    }
    let dim = 1usize << enc.num_qubits();
    let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
    for x in &shard[..take] {
        let s = enc.encode(x)?;
        let a = s.amplitudes().expect("encoders produce pure states");
        for i in 0..dim {
            if a[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                rho[i * dim + j] += a[i] * a[j].conj();
            }
        }
    }
    let w = 1.0 / take as f64;
    rho.iter_mut().for_each(|v| *v *= w);
    Ok(QuantumState::from_parts_unchecked(
        enc.num_qubits(),
        Repr::Mixed(rho),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::trace_out_trailing;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn amps(s: &QuantumState) -> Vec<f64> {
        s.amplitudes().unwrap().iter().map(|a| a.re).collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn standardize_examples() {
        let out = standardize(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(out, vec![vec![-1.0], vec![1.0]]);

        let out2 = standardize(&out).unwrap();
        assert!(close(&[out2[0][0], out2[1][0]], &[-1.0, 1.0], 1e-9));

        let c = standardize(&[vec![5.0], vec![5.0], vec![5.0]]).unwrap();
        assert!(c.iter().all(|r| r[0] == 0.0));

        assert!(matches!(standardize(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn standardize_moments() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 * 0.3 + 2.0, ((i * 7) % 11) as f64])
            .collect();
        let out = standardize(&rows).unwrap();
        for c in 0..2 {
            let mean = out.iter().map(|r| r[c]).sum::<f64>() / 50.0;
            let var = out.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn amplitude_examples() {
        let s = amplitude_encode(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(amps(&s), vec![1.0, 0.0, 0.0, 0.0]);
        let s = amplitude_encode(&[3.0, 4.0], 1).unwrap();
        assert!(close(&amps(&s), &[0.6, 0.8], 1e-15));
        let s = amplitude_encode(&[1.0, 1.0], 1).unwrap();
        assert!(close(&amps(&s), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], 1e-15));
        // padding
        let s = amplitude_encode(&[1.0, 1.0, 1.0], 2).unwrap();
        assert!((amps(&s)[3]).abs() == 0.0);

        assert!(amplitude_encode(&[0.0, 0.0], 1).is_err());
        assert!(amplitude_encode(&[1.0, 2.0, 3.0], 1).is_err());
    }

    #[test]
    fn basis_examples() {
        assert_eq!(amps(&basis_encode(&[0, 0]).unwrap())[0], 1.0);
        assert_eq!(amps(&basis_encode(&[1, 0]).unwrap())[2], 1.0);
        assert_eq!(amps(&basis_encode(&[1, 1]).unwrap())[3], 1.0);
        assert!(basis_encode(&[0, 2]).is_err());
    }

    #[test]
    fn angle_examples() {
        let enc = Encoder::new(EncoderKind::Angle, 1).unwrap();
        assert!(close(&amps(&enc.encode(&[0.0]).unwrap()), &[1.0, 0.0], 1e-15));
        assert!(close(&amps(&enc.encode(&[PI]).unwrap()), &[0.0, 1.0], 1e-15));
        assert!(close(
            &amps(&enc.encode(&[FRAC_PI_2]).unwrap()),
            &[FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            1e-15
        ));
        assert!(angle_encode(&[0.1, 0.2], 1).is_err());
    }

    #[test]
    fn pad_examples() {
        let s = QuantumState::basis(1, 1).unwrap();
        assert_eq!(pad_to_qubits(&s, 1).unwrap(), s);
        assert_eq!(amps(&pad_to_qubits(&s, 2).unwrap()), vec![0.0, 0.0, 1.0, 0.0]);

        let half = Complex64::new(0.5, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let mixed = QuantumState::from_density(1, vec![half, z, z, half]).unwrap();
        let p = pad_to_qubits(&mixed, 2).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| p.entry(i, i).re).collect();
        assert_eq!(diag, vec![0.5, 0.0, 0.5, 0.0]);
        assert!((p.trace() - 1.0).abs() < 1e-15);

        assert!(pad_to_qubits(&QuantumState::zero(2), 1).is_err());
    }

    #[test]
    fn summary_examples() {
        let enc = Encoder::new(EncoderKind::Amplitude, 1).unwrap();
        let single = client_state_summary(&[vec![3.0, 4.0]], &enc, 64).unwrap();
        let want = enc.encode(&[3.0, 4.0]).unwrap().to_density();
        assert_eq!(single, want);

        let two = client_state_summary(&[vec![1.0, 0.0], vec![0.0, 1.0]], &enc, 64).unwrap();
        assert_eq!(two.entry(0, 0).re, 0.5);
        assert_eq!(two.entry(1, 1).re, 0.5);
        assert_eq!(two.entry(0, 1).norm(), 0.0);

        let same = client_state_summary(&[vec![3.0, 4.0], vec![3.0, 4.0]], &enc, 64).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((same.entry(i, j) - single.entry(i, j)).norm() < 1e-15);
            }
        }
        assert!(client_state_summary(&[], &enc, 64).is_err());
    }

    #[test]
    fn encoder_capacity() {
        let enc = Encoder::new(EncoderKind::Amplitude, 2).unwrap();
        assert!(enc.encode(&[1.0; 5]).is_err());
        let enc = Encoder::new(EncoderKind::Angle, 2).unwrap();
        assert!(enc.encode(&[1.0; 3]).is_err());
    }

    #[test]
    fn pool_features_averages_blocks() {
        assert_eq!(pool_features(&[1.0, 3.0, 5.0, 7.0], 2), vec![2.0, 6.0]);
        assert_eq!(pool_features(&[1.0, 2.0], 4), vec![1.0, 2.0]);
    }

    fn vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..=8)
            .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
    }

    proptest! {
        #[test]
        fn amplitude_scale_invariant(x in vec_strategy(), c in 0.01f64..100.0) {
            let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
            let a = amplitude_encode(&x, 3).unwrap();
            let b = amplitude_encode(&scaled, 3).unwrap();
            prop_assert!((a.trace() - 1.0).abs() < 1e-9);
            prop_assert!(close(&amps(&a), &amps(&b), 1e-12));
        }

        #[test]
        fn pad_then_trace_out_round_trips(x in vec_strategy(), extra in 1usize..3) {
            let rho = amplitude_encode(&x, 3).unwrap().to_density();
            let padded = pad_to_qubits(&rho, 3 + extra).unwrap();
            let back = trace_out_trailing(&padded, 3).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    prop_assert!((back.entry(i, j) - rho.entry(i, j)).norm() < 1e-10);
                }
            }
        }

        #[test]
        fn summary_permutation_invariant(
            rows in prop::collection::vec(vec_strategy().prop_map(|mut v| { v.resize(4, 0.5); v }), 1..10),
            rot in 0usize..10,
        ) {
            let enc = Encoder::new(EncoderKind::Amplitude, 2).unwrap();
            let mut perm = rows.clone();
            perm.reverse();
            let k = rot % perm.len();
            perm.rotate_left(k);
            let a = client_state_summary(&rows, &enc, 64).unwrap();
            let b = client_state_summary(&perm, &enc, 64).unwrap();
            prop_assert!((a.trace() - 1.0).abs() < 1e-9);
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert!((a.entry(i, j) - b.entry(i, j)).norm() < 1e-12);
                }
            }
        }
    }
}
