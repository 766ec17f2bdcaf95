use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernel::{self, Mat2, Superop};
use super::state::{QuantumState, Repr};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    X,
    H,
    RX,
    RY,
    RZ,
    CNOT,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::RX | GateKind::RY | GateKind::RZ)
    }

    pub fn arity(self) -> usize {
        if self == GateKind::CNOT {
            2
        } else {
            1
        }
    }
}

/// A validated gate. For CNOT, `targets = [control, target]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    kind: GateKind,
    angle: Option<f64>,
    targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, angle: Option<f64>, targets: Vec<usize>) -> Result<Self> {
        match (kind.is_rotation(), angle) {
            (true, None) => {
                return Err(Error::InvalidGate(format!("{kind:?} requires an angle")))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidGate(format!("{kind:?} takes no angle")))
            }
            (true, Some(a)) if !a.is_finite() => {
                return Err(Error::InvalidGate(format!("non-finite angle {a}")))
            }
            _ => {}
        }
        if targets.len() != kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} expects {} target(s), got {}",
                kind.arity(),
                targets.len()
            )));
        }
        if kind == GateKind::CNOT && targets[0] == targets[1] {
            return Err(Error::InvalidGate("CNOT control equals target".into()));
        }
        Ok(Gate {
            kind,
            angle,
            targets,
        })
    }

    pub fn x(qubit: usize) -> Self {
        Gate {
            kind: GateKind::X,
            angle: None,
            targets: vec![qubit],
        }
    }

    pub fn h(qubit: usize) -> Self {
        Gate {
            kind: GateKind::H,
            angle: None,
            targets: vec![qubit],
        }
    }

    pub fn rx(qubit: usize, theta: f64) -> Self {
        Self::rotation(GateKind::RX, qubit, theta)
    }

    pub fn ry(qubit: usize, theta: f64) -> Self {
        Self::rotation(GateKind::RY, qubit, theta)
    }

    pub fn rz(qubit: usize, theta: f64) -> Self {
        Self::rotation(GateKind::RZ, qubit, theta)
    }

    fn rotation(kind: GateKind, qubit: usize, theta: f64) -> Self {
        Gate {
            kind,
            angle: Some(theta),
            targets: vec![qubit],
        }
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Self::new(GateKind::CNOT, None, vec![control, target])
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// 2x2 matrix for single-qubit gates, `None` for CNOT.
    pub fn matrix(&self) -> Option<Mat2> {
        let theta = self.angle.unwrap_or(0.0);
        match self.kind {
            GateKind::X => Some(pauli_x()),
            GateKind::H => Some(hadamard()),
            GateKind::RX => Some(rx_matrix(theta)),
            GateKind::RY => Some(ry_matrix(theta)),
            GateKind::RZ => Some(rz_matrix(theta)),
            GateKind::CNOT => None,
        }
    }

    /// Full row-major unitary on the gate's own qubits (2x2 or 4x4, control first).
    pub fn unitary(&self) -> Vec<Complex64> {
        match self.matrix() {
            Some(m) => m.to_vec(),
            None => {
                let mut u = vec![Complex64::new(0.0, 0.0); 16];
                for (row, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                    u[row * 4 + col] = Complex64::new(1.0, 0.0);
                }
                u
            }
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> Mat2 {
    [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
}

pub fn hadamard() -> Mat2 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]
}

pub fn rx_matrix(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)]
}

pub fn ry_matrix(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]
}

pub fn rz_matrix(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [c(co, -s), c(0.0, 0.0), c(0.0, 0.0), c(co, s)]
}

/// Applies `gate`, returning the evolved state in the same representation.
pub fn apply_gate(state: &QuantumState, gate: &Gate) -> Result<QuantumState> {
    let n = state.num_qubits();
    for &t in gate.targets() {
        state.require_qubit(t)?;
    }
    let mut repr = state.repr().clone();
    match (&mut repr, gate.matrix()) {
        (Repr::Pure(a), Some(u)) => kernel::sv_apply_1q(a, n, gate.targets[0], &u),
        (Repr::Pure(a), None) => kernel::sv_apply_cnot(a, n, gate.targets[0], gate.targets[1]),
        (Repr::Mixed(r), Some(u)) => {
            kernel::dm_apply_superop(r, n, gate.targets[0], &Superop::from_unitary(&u))
        }
        (Repr::Mixed(r), None) => kernel::dm_apply_cnot(r, n, gate.targets[0], gate.targets[1]),
    }
    Ok(QuantumState::from_parts_unchecked(n, repr))
}
