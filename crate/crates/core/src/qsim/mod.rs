//! Minimal quantum circuit engine.
//!
//! States are either statevectors or density matrices. Noiseless evolution stays on the
//! statevector path; any Kraus channel requires the density-matrix representation.
//! Qubit 0 is the most significant bit of the computational-basis index.

mod channel;
mod gate;
pub(crate) mod kernel;
mod state;

pub use channel::{
    amplitude_damping, apply_channel, expectation_z, phase_damping, sample_expectation_z,
    thermal_relaxation, ChannelLabel, KrausChannel, NoiseConfig, CPTP_TOL,
};
pub(crate) use channel::sample_from_exact;
pub use gate::{apply_gate, hadamard, pauli_x, rx_matrix, ry_matrix, rz_matrix, Gate, GateKind};
pub use kernel::Mat2;
pub use state::{trace_distance, trace_out_trailing, QuantumState, Repr};
