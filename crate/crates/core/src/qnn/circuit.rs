//! Fused execution of a [`PqcModel`] circuit.
//!
//! Each qubit's RX·RY·RZ block in a layer is collapsed into one operator (a 2x2 unitary
//! on the statevector path, or a single-qubit superoperator including the per-gate
//! noise on the density path). Base passes can record the state before each block so
//! that parameter-shift evaluations restart from there instead of from the input.

use num_complex::Complex64;
use rand::Rng;

use super::model::{PqcModel, AXES};
use crate::qsim::kernel::{self, Mat2, Superop};
use crate::qsim::{rx_matrix, ry_matrix, rz_matrix, sample_from_exact, NoiseConfig, QuantumState, Repr};
use crate::{Error, Result};

#[derive(Clone)]
pub(crate) enum Buf {
    Pure(Vec<Complex64>),
    Mixed(Vec<Complex64>),
}

enum Block {
    Unitary(Mat2),
    Super(Superop),
    Skip,
}

struct NoiseOps {
    one_q: Superop,
    two_q: Superop,
}

/// Angle override for one rotation gate: `(flat angle index, value)`.
pub(crate) type Shift = (usize, f64);

pub(crate) struct Circuit<'m> {
    model: &'m PqcModel,
    noise: Option<NoiseOps>,
    blocks: Vec<Block>,
    cnots: Vec<(usize, usize)>,
}

fn rotation(axis: usize, theta: f64) -> Mat2 {
    match axis {
        0 => rx_matrix(theta),
        1 => ry_matrix(theta),
        _ => rz_matrix(theta),
    }
}

impl<'m> Circuit<'m> {
    pub fn new(model: &'m PqcModel, noise: &NoiseConfig) -> Result<Self> {
        let noise = if noise.is_noisy() {
            let one = noise.gate_channel(false)?;
            let two = noise.gate_channel(true)?;
            match (one, two) {
                (Some(a), Some(b)) => Some(NoiseOps {
                    one_q: a.superop(),
                    two_q: b.superop(),
                }),
                _ => None,
            }
        } else {
            None
        };
        let mut c = Circuit {
            model,
            noise,
            blocks: Vec::new(),
            cnots: model.cnot_pairs(),
        };
        let n_blocks = model.num_layers() * model.num_qubits();
        c.blocks = (0..n_blocks).map(|b| c.block(b, None)).collect();
        Ok(c)
    }

    pub fn is_mixed(&self) -> bool {
        self.noise.is_some()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    fn block(&self, block: usize, shift: Option<Shift>) -> Block {
        let base = block * AXES;
        let angle = |a: usize| match shift {
            Some((i, v)) if i == base + a => v,
            _ => self.model.angles()[base + a],
        };
        let active: Vec<usize> = (0..AXES)
            .filter(|&a| !self.model.is_pruned(base + a))
            .collect();
        if active.is_empty() {
            return Block::Skip;
        }
        match &self.noise {
            None => {
                let mut u = rotation(active[0], angle(active[0]));
                for &a in &active[1..] {
                    u = kernel::mat2_mul(&rotation(a, angle(a)), &u);
                }
                Block::Unitary(u)
            }
            Some(n) => {
                let mut s = Superop::from_unitary(&rotation(active[0], angle(active[0])))
                    .then(&n.one_q);
                for &a in &active[1..] {
                    s = s
                        .then(&Superop::from_unitary(&rotation(a, angle(a))))
                        .then(&n.one_q);
                }
                Block::Super(s)
            }
        }
    }

    pub fn prepare(&self, input: &QuantumState) -> Result<Buf> {
        if input.num_qubits() != self.model.num_qubits() {
            return Err(Error::DimensionMismatch(format!(
                "{}-qubit input for a {}-qubit model",
                input.num_qubits(),
                self.model.num_qubits()
            )));
        }
        Ok(match (self.is_mixed(), input.repr()) {
            (false, Repr::Pure(a)) => Buf::Pure(a.clone()),
            (false, Repr::Mixed(_)) | (true, _) => {
                Buf::Mixed(input.to_density().into_repr().into_mixed())
            }
        })
    }

    fn apply_block(&self, buf: &mut Buf, qubit: usize, block: &Block) {
        let n = self.model.num_qubits();
        match (buf, block) {
            (_, Block::Skip) => {}
            (Buf::Pure(a), Block::Unitary(u)) => kernel::sv_apply_1q(a, n, qubit, u),
            (Buf::Mixed(r), Block::Unitary(u)) => {
                kernel::dm_apply_superop(r, n, qubit, &Superop::from_unitary(u))
            }
            (Buf::Mixed(r), Block::Super(s)) => kernel::dm_apply_superop(r, n, qubit, s),
            (Buf::Pure(_), Block::Super(_)) => unreachable!("noisy blocks need a density matrix"),
        }
    }

    fn apply_ring(&self, buf: &mut Buf) {
        let n = self.model.num_qubits();
        for &(c, t) in &self.cnots {
            match buf {
                Buf::Pure(a) => kernel::sv_apply_cnot(a, n, c, t),
                Buf::Mixed(r) => {
                    kernel::dm_apply_cnot(r, n, c, t);
                    if let Some(noise) = &self.noise {
                        kernel::dm_apply_superop(r, n, c, &noise.two_q);
                        kernel::dm_apply_superop(r, n, t, &noise.two_q);
                    }
                }
            }
        }
    }

    /// Evolves `buf` from block `start` to the end of the circuit. With `shift`, the block
    /// containing the shifted angle is rebuilt. With `snapshots`, the state before each
    /// block is recorded (indexed by block).
    pub fn run(
        &self,
        buf: &mut Buf,
        start: usize,
        shift: Option<Shift>,
        mut snapshots: Option<&mut Vec<Buf>>,
    ) {
        let q = self.model.num_qubits();
        let shifted_block = shift.map(|(i, _)| i / AXES);
        let first_layer = start / q;
        for l in first_layer..self.model.num_layers() {
            let j0 = if l == first_layer { start % q } else { 0 };
            for j in j0..q {
                let b = l * q + j;
                if let Some(s) = snapshots.as_deref_mut() {
                    s.push(buf.clone());
                }
                if shifted_block == Some(b) {
                    let blk = self.block(b, shift);
                    self.apply_block(buf, j, &blk);
                } else {
                    self.apply_block(buf, j, &self.blocks[b]);
                }
            }
            self.apply_ring(buf);
        }
    }

    fn block_superop(blk: &Block) -> Option<Superop> {
        match blk {
            Block::Skip => None,
            Block::Unitary(u) => Some(Superop::from_unitary(u)),
            Block::Super(s) => Some(s.clone()),
        }
    }

    /// Shift-rule derivatives of `Σ_j coeffs[j] <Z_j>` for every angle, evaluated in the
    /// Heisenberg picture: the observable is pulled back through the circuit once, and
    /// each shifted term only needs its own block applied to the recorded input of that
    /// block. Needs the density-matrix snapshots of a full base pass.
    pub fn adjoint_shift_gradient(&self, snapshots: &[Buf], coeffs: &[f64]) -> Vec<f64> {
        let n = self.model.num_qubits();
        let dim = 1usize << n;
        let zero = Complex64::new(0.0, 0.0);
        let mut obs = vec![zero; dim * dim];
        for i in 0..dim {
            let v: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| if i & kernel::bit(n, j) == 0 { *c } else { -*c })
                .sum();
            obs[i * dim + i] = Complex64::new(v, 0.0);
        }
        let two_q_t = self.noise.as_ref().map(|nz| nz.two_q.transpose());
        let mut after: Vec<Vec<Complex64>> = vec![Vec::new(); self.blocks.len()];
        for l in (0..self.model.num_layers()).rev() {
            for &(c, t) in self.cnots.iter().rev() {
                if let Some(s) = &two_q_t {
                    kernel::dm_apply_superop(&mut obs, n, t, s);
                    kernel::dm_apply_superop(&mut obs, n, c, s);
                }
                kernel::dm_apply_cnot(&mut obs, n, c, t);
            }
            for j in (0..n).rev() {
                let b = l * n + j;
                after[b] = obs.clone();
                if let Some(s) = Self::block_superop(&self.blocks[b]) {
                    kernel::dm_apply_superop(&mut obs, n, j, &s.transpose());
                }
            }
        }
        let mut grad = vec![0.0; self.model.angle_count()];
        for (i, g) in grad.iter_mut().enumerate() {
            if self.model.is_pruned(i) {
                continue;
            }
            let b = i / AXES;
            let rho = match &snapshots[b] {
                Buf::Mixed(r) => r,
                Buf::Pure(_) => unreachable!("adjoint gradients need density snapshots"),
            };
            let theta = self.model.angles()[i];
            let value = |shift: f64| {
                let blk = self.block(b, Some((i, theta + shift)));
                let s = Self::block_superop(&blk).expect("an unpruned angle has a block");
                kernel::dm_superop_overlap(rho, &after[b], n, b % n, &s).re
            };
            *g = (value(std::f64::consts::FRAC_PI_2) - value(-std::f64::consts::FRAC_PI_2)) / 2.0;
        }
        grad
    }

    pub fn expectations(&self, buf: &Buf) -> Vec<f64> {
        let n = self.model.num_qubits();
        (0..n)
            .map(|j| match buf {
                Buf::Pure(a) => kernel::sv_expectation_z(a, n, j),
                Buf::Mixed(r) => kernel::dm_expectation_z(r, n, j),
            })
            .map(|e| e.clamp(-1.0, 1.0))
            .collect()
    }

    pub fn measure<R: Rng + ?Sized>(&self, buf: &Buf, shots: Option<u32>, rng: &mut R) -> Vec<f64> {
        let exact = self.expectations(buf);
        match shots {
            None => exact,
            Some(s) => exact.into_iter().map(|e| sample_from_exact(e, s, rng)).collect(),
        }
    }

    pub fn forward(&self, input: &QuantumState) -> Result<Vec<f64>> {
        let mut buf = self.prepare(input)?;
        self.run(&mut buf, 0, None, None);
        Ok(self.expectations(&buf))
    }
}

trait IntoMixed {
    fn into_mixed(self) -> Vec<Complex64>;
}

impl IntoMixed for Repr {
    fn into_mixed(self) -> Vec<Complex64> {
        match self {
            Repr::Mixed(r) => r,
            Repr::Pure(_) => unreachable!("to_density returns a mixed state"),
        }
    }
}
