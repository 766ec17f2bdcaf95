use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

pub(crate) const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Repr {
    /// Statevector of length `2^q`.
    Pure(Vec<Complex64>),
    /// Row-major density matrix of size `2^q x 2^q`.
    Mixed(Vec<Complex64>),
}

/// A pure or mixed state over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    num_qubits: usize,
    repr: Repr,
}

impl QuantumState {
    /// `|0...0>` as a statevector.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0).expect("index 0 is always in range")
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidState("a state needs at least one qubit".into()));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::InvalidState(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(QuantumState {
            num_qubits,
            repr: Repr::Pure(amps),
        })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let num_qubits = log2_dim(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm {norm} is not 1")));
        }
        Ok(QuantumState {
            num_qubits,
            repr: Repr::Pure(amps),
        })
    }

    pub fn from_real_amplitudes(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Builds a mixed state, checking unit trace and Hermiticity.
    pub fn from_density(num_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if num_qubits == 0 || data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "density buffer of length {} for {num_qubits} qubits",
                data.len()
            )));
        }
        let state = QuantumState {
            num_qubits,
            repr: Repr::Mixed(data),
        };
        let tr = state.trace();
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        if state.hermiticity_error() > NORM_TOL {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        Ok(state)
    }

    pub(crate) fn from_parts_unchecked(num_qubits: usize, repr: Repr) -> Self {
        QuantumState { num_qubits, repr }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn into_repr(self) -> Repr {
        self.repr
    }

    pub fn amplitudes(&self) -> Option<&[Complex64]> {
        match &self.repr {
            Repr::Pure(a) => Some(a),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> Option<&[Complex64]> {
        match &self.repr {
            Repr::Pure(_) => None,
            Repr::Mixed(r) => Some(r),
        }
    }

    /// Density-matrix entry `<row|rho|col>`; computed from the amplitudes for pure states.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match &self.repr {
            Repr::Pure(a) => a[row] * a[col].conj(),
            Repr::Mixed(r) => r[row * self.dim() + col],
        }
    }

    /// `|psi><psi|` for pure states; mixed states are returned unchanged.
    pub fn to_density(&self) -> QuantumState {
        match &self.repr {
            Repr::Mixed(_) => self.clone(),
            Repr::Pure(a) => {
                let dim = a.len();
                let mut rho = Vec::with_capacity(dim * dim);
                for ai in a {
                    for aj in a {
                        rho.push(ai * aj.conj());
                    }
                }
                QuantumState {
                    num_qubits: self.num_qubits,
                    repr: Repr::Mixed(rho),
                }
            }
        }
    }

    /// Squared norm for pure states, trace for mixed states.
    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Pure(a) => a.iter().map(|x| x.norm_sqr()).sum(),
            Repr::Mixed(r) => {
                let dim = self.dim();
                (0..dim).map(|i| r[i * dim + i].re).sum()
            }
        }
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.entry(index, index).re
    }

    pub fn hermiticity_error(&self) -> f64 {
        match &self.repr {
            Repr::Pure(_) => 0.0,
            Repr::Mixed(r) => {
                let dim = self.dim();
                let mut worst = 0.0f64;
                for i in 0..dim {
                    for j in 0..dim {
                        worst = worst.max((r[i * dim + j] - r[j * dim + i].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    /// Eigenvalues of the density matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let rho = self.to_density();
        let m = to_matrix(rho.density().expect("mixed"), self.dim());
        hermitian_eigenvalues(m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub(crate) fn require_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn log2_dim(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "length {len} is not a power of two >= 2"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

pub(crate) fn to_matrix(data: &[Complex64], dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(dim, dim, data)
}

pub(crate) fn hermitian_eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Traces out the `num_qubits - keep` least-significant qubits, returning the reduced
/// density matrix on the leading `keep` qubits.
pub fn trace_out_trailing(state: &QuantumState, keep: usize) -> Result<QuantumState> {
    let n = state.num_qubits();
    if keep == 0 || keep > n {
        return Err(Error::DimensionMismatch(format!(
            "cannot keep {keep} of {n} qubits"
        )));
    }
    let drop = n - keep;
    let small = 1usize << keep;
    let env = 1usize << drop;
    let mut out = vec![Complex64::new(0.0, 0.0); small * small];
    for i in 0..small {
        for j in 0..small {
            out[i * small + j] = (0..env).map(|e| state.entry(i * env + e, j * env + e)).sum();
        }
    }
    Ok(QuantumState::from_parts_unchecked(keep, Repr::Mixed(out)))
}

/// Trace distance `1/2 * sum |eig(a - b)|` between two states of equal size.
pub fn trace_distance(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.num_qubits() != b.num_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "trace distance between {}- and {}-qubit states",
            a.num_qubits(),
            b.num_qubits()
        )));
    }
    let dim = a.dim();
    let mut diff = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            diff[(i, j)] = a.entry(i, j) - b.entry(i, j);
        }
    }
    let ev = hermitian_eigenvalues(diff);
    Ok((0.5 * ev.iter().map(|e| e.abs()).sum::<f64>()).clamp(0.0, 1.0))
}
