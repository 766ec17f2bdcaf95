//! Simulator and library for heterogeneous quantum federated learning.
//!
//! The crate is split along the layers of the pipeline:
//!
//! - [`qsim`]: statevector / density-matrix evolution, gates, Kraus noise channels.
//! - [`encode`]: classical-to-quantum encoders, qubit padding, per-client state summaries.
//! - [`qnn`]: layered parameterized circuits with a linear decode head, parameter-shift
//!   gradients, personalized local updates and Adam.
//! - [`fed`]: aggregation strategies, sporadic participation and the round loop.
//! - [`data`]: IDX/CSV loading, synthetic tasks, dimension reduction, non-IID partitioning.

pub mod data;
pub mod encode;
mod error;
pub mod fed;
pub mod qnn;
pub mod qsim;
pub mod seed;

pub use error::{Error, Result};
