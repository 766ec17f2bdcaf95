use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::kernel::{self, Mat2, Superop};
use super::state::{QuantumState, Repr};
use crate::{Error, Result};

pub const CPTP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLabel {
    AmplitudeDamping,
    PhaseDamping,
    ThermalRelaxation,
    Identity,
    /// Sequential composition of other channels.
    Composite,
}

/// Single-qubit noise process given by its Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    operators: Vec<Mat2>,
    label: ChannelLabel,
}

impl KrausChannel {
    /// Rejects operator sets that are not trace preserving within `CPTP_TOL`.
    pub fn new(operators: Vec<Mat2>, label: ChannelLabel) -> Result<Self> {
        let ch = Self::new_unchecked(operators, label);
        ch.validate()?;
        Ok(ch)
    }

    /// Skips the completeness check; [`apply_channel`] still validates before use.
    pub fn new_unchecked(operators: Vec<Mat2>, label: ChannelLabel) -> Self {
        KrausChannel { operators, label }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        KrausChannel {
            operators: vec![[one, zero, zero, one]],
            label: ChannelLabel::Identity,
        }
    }

    pub fn operators(&self) -> &[Mat2] {
        &self.operators
    }

    pub fn label(&self) -> ChannelLabel {
        self.label
    }

    /// `max |(sum_k K^dag K - I)_ij|`.
    pub fn completeness_deviation(&self) -> f64 {
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        for k in &self.operators {
            let kd = kernel::mat2_dagger(k);
            let p = kernel::mat2_mul(&kd, k);
            for (a, b) in acc.iter_mut().zip(p) {
                *a += b;
            }
        }
        acc[0] -= 1.0;
        acc[3] -= 1.0;
        acc.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        let deviation = self.completeness_deviation();
        if self.operators.is_empty() || !(deviation < CPTP_TOL) {
            return Err(Error::NotCptp { deviation });
        }
        Ok(())
    }

    /// Channel applying `self` first and then `next`.
    pub fn then(&self, next: &KrausChannel) -> KrausChannel {
        let mut ops = Vec::with_capacity(self.operators.len() * next.operators.len());
        for b in &next.operators {
            for a in &self.operators {
                let k = kernel::mat2_mul(b, a);
                if k.iter().any(|x| x.norm_sqr() > 0.0) {
                    ops.push(k);
                }
            }
        }
        KrausChannel {
            operators: ops,
            label: ChannelLabel::Composite,
        }
    }

    /// Average gate fidelity against the identity, `(2 F_e + 1) / 3` with entanglement
    /// fidelity `F_e = Σ_k |Tr K_k|² / 4`.
    pub fn average_fidelity(&self) -> f64 {
        let fe: f64 = self
            .operators
            .iter()
            .map(|k| (k[0] + k[3]).norm_sqr())
            .sum::<f64>()
            / 4.0;
        (2.0 * fe + 1.0) / 3.0
    }

    pub(crate) fn superop(&self) -> Superop {
        Superop::from_kraus(&self.operators)
    }
}

fn real_diag(a: f64, b: f64) -> Mat2 {
    let z = Complex64::new(0.0, 0.0);
    [Complex64::new(a, 0.0), z, z, Complex64::new(b, 0.0)]
}

fn unit_interval(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected: "[0, 1]",
        })
    }
}

/// `K0 = [[1,0],[0,sqrt(1-γ)]]`, `K1 = [[0,sqrt(γ)],[0,0]]`.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    unit_interval("gamma", gamma)?;
    let z = Complex64::new(0.0, 0.0);
    let k0 = real_diag(1.0, (1.0 - gamma).sqrt());
    let k1 = [z, Complex64::new(gamma.sqrt(), 0.0), z, z];
    KrausChannel::new(vec![k0, k1], ChannelLabel::AmplitudeDamping)
}

/// `K0 = diag(1, sqrt(1-p))`, `K1 = diag(0, sqrt(p))`.
pub fn phase_damping(p: f64) -> Result<KrausChannel> {
    unit_interval("p", p)?;
    let k0 = real_diag(1.0, (1.0 - p).sqrt());
    let k1 = real_diag(0.0, p.sqrt());
    KrausChannel::new(vec![k0, k1], ChannelLabel::PhaseDamping)
}

/// Zero-temperature thermal relaxation over one gate duration.
///
/// Populations relax toward `|0>` with `p_reset = 1 - exp(-t/T1)`; the remaining
/// coherence loss is a phase-damping step chosen so that off-diagonals decay by
/// exactly `exp(-t/T2)`. Requires `T2 <= 2 T1`.
pub fn thermal_relaxation(t1_us: f64, t2_us: f64, gate_time_ns: f64) -> Result<KrausChannel> {
    if !(t1_us > 0.0) {
        return Err(Error::OutOfRange {
            name: "t1_us",
            value: t1_us,
            expected: "(0, inf)",
        });
    }
    if !(t2_us > 0.0) || t2_us > 2.0 * t1_us {
        return Err(Error::OutOfRange {
            name: "t2_us",
            value: t2_us,
            expected: "(0, 2*t1_us]",
        });
    }
    if !(gate_time_ns >= 0.0) {
        return Err(Error::OutOfRange {
            name: "gate_time_ns",
            value: gate_time_ns,
            expected: "[0, inf)",
        });
    }
    let t_us = gate_time_ns * 1e-3;
    let p_reset = -(-t_us / t1_us).exp_m1();
    // Coherence after the reset step is exp(-t/(2 T1)); the dephasing step supplies
    // the rest: (1 - p_phase) = exp(-2t/T2 + t/T1).
    let p_phase = -(t_us * (1.0 / t1_us - 2.0 / t2_us)).exp_m1();
    let p_phase = p_phase.clamp(0.0, 1.0);
    let ch = amplitude_damping(p_reset.clamp(0.0, 1.0))?.then(&phase_damping(p_phase)?);
    let ch = KrausChannel {
        label: ChannelLabel::ThermalRelaxation,
        ..ch
    };
    ch.validate()?;
    Ok(ch)
}

/// `rho -> sum_k (K_k ⊗ I) rho (K_k ⊗ I)^dag` on qubit `target`.
pub fn apply_channel(rho: &QuantumState, ch: &KrausChannel, target: usize) -> Result<QuantumState> {
    let Repr::Mixed(data) = rho.repr() else {
        return Err(Error::WrongRepresentation { expected: "mixed" });
    };
    rho.require_qubit(target)?;
    ch.validate()?;
    let mut out = data.clone();
    kernel::dm_apply_superop(&mut out, rho.num_qubits(), target, &ch.superop());
    Ok(QuantumState::from_parts_unchecked(
        rho.num_qubits(),
        Repr::Mixed(out),
    ))
}

/// Exact `<Z>` on one qubit.
pub fn expectation_z(state: &QuantumState, qubit: usize) -> Result<f64> {
    state.require_qubit(qubit)?;
    let n = state.num_qubits();
    Ok(match state.repr() {
        Repr::Pure(a) => kernel::sv_expectation_z(a, n, qubit),
        Repr::Mixed(r) => kernel::dm_expectation_z(r, n, qubit),
    }
    .clamp(-1.0, 1.0))
}

/// Finite-shot estimate of `<Z>`: the number of `+1` outcomes is Binomial(shots, (1+<Z>)/2).
pub fn sample_expectation_z<R: Rng + ?Sized>(
    state: &QuantumState,
    qubit: usize,
    shots: u32,
    rng: &mut R,
) -> Result<f64> {
    let exact = expectation_z(state, qubit)?;
    Ok(sample_from_exact(exact, shots, rng))
}

pub(crate) fn sample_from_exact<R: Rng + ?Sized>(exact: f64, shots: u32, rng: &mut R) -> f64 {
    if shots == 0 {
        return exact;
    }
    let p0 = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots as u64, p0)
        .expect("p0 clamped to [0,1]")
        .sample(rng);
    2.0 * k as f64 / shots as f64 - 1.0
}

/// Per-device noise parameters. Channels are inserted after every gate on each qubit
/// the gate touches, in the order amplitude damping, phase damping, thermal relaxation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub gamma_ad: f64,
    pub p_pd: f64,
    pub thermal_relaxation: bool,
    pub t1_us: f64,
    pub t2_us: f64,
    pub gate_time_1q_ns: f64,
    pub gate_time_2q_ns: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            enabled: false,
            gamma_ad: 0.0,
            p_pd: 0.0,
            thermal_relaxation: true,
            t1_us: 50.0,
            t2_us: 70.0,
            gate_time_1q_ns: 50.0,
            gate_time_2q_ns: 300.0,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self::default()
    }

    /// Amplitude damping only, with thermal relaxation switched off.
    pub fn amplitude_damping_only(gamma_ad: f64) -> Self {
        NoiseConfig {
            enabled: gamma_ad > 0.0,
            gamma_ad,
            thermal_relaxation: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        unit_interval("gamma_ad", self.gamma_ad)?;
        unit_interval("p_pd", self.p_pd)?;
        for (name, v) in [
            ("t1_us", self.t1_us),
            ("t2_us", self.t2_us),
            ("gate_time_1q_ns", self.gate_time_1q_ns),
            ("gate_time_2q_ns", self.gate_time_2q_ns),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    expected: "(0, inf)",
                });
            }
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Err(Error::OutOfRange {
                name: "t2_us",
                value: self.t2_us,
                expected: "(0, 2*t1_us]",
            });
        }
        Ok(())
    }

    /// The composed per-qubit channel inserted after a gate, or `None` when noise is off
    /// or every component is trivial.
    pub fn gate_channel(&self, two_qubit: bool) -> Result<Option<KrausChannel>> {
        if !self.enabled {
            return Ok(None);
        }
        self.validate()?;
        let mut parts = Vec::new();
        if self.gamma_ad > 0.0 {
            parts.push(amplitude_damping(self.gamma_ad)?);
        }
        if self.p_pd > 0.0 {
            parts.push(phase_damping(self.p_pd)?);
        }
        if self.thermal_relaxation {
            let t = if two_qubit {
                self.gate_time_2q_ns
            } else {
                self.gate_time_1q_ns
            };
            parts.push(thermal_relaxation(self.t1_us, self.t2_us, t)?);
        }
        Ok(parts.into_iter().reduce(|acc, ch| acc.then(&ch)))
    }

    /// Average fidelity of the single-qubit gate channel; 1 for a noiseless device.
    pub fn gate_fidelity(&self) -> Result<f64> {
        Ok(self
            .gate_channel(false)?
            .map_or(1.0, |ch| ch.average_fidelity()))
    }

    /// True when evolution under this config needs a density matrix.
    pub fn is_noisy(&self) -> bool {
        self.enabled && (self.gamma_ad > 0.0 || self.p_pd > 0.0 || self.thermal_relaxation)
    }
}
