//! Low-level in-place kernels on raw amplitude / density buffers.
//!
//! Qubit 0 is the most significant bit of the basis index. Density matrices are
//! stored row-major, `dim * dim` entries.

use num_complex::Complex64;

pub type Mat2 = [Complex64; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
pub fn bit(num_qubits: usize, qubit: usize) -> usize {
    1 << (num_qubits - 1 - qubit)
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [a[0].conj(), a[2].conj(), a[1].conj(), a[3].conj()]
}

pub fn sv_apply_1q(amps: &mut [Complex64], num_qubits: usize, qubit: usize, u: &Mat2) {
    let s = bit(num_qubits, qubit);
    for i in 0..amps.len() {
        if i & s == 0 {
            let a0 = amps[i];
            let a1 = amps[i | s];
            amps[i] = u[0] * a0 + u[1] * a1;
            amps[i | s] = u[2] * a0 + u[3] * a1;
        }
    }
}

pub fn sv_apply_cnot(amps: &mut [Complex64], num_qubits: usize, control: usize, target: usize) {
    let c = bit(num_qubits, control);
    let t = bit(num_qubits, target);
    for i in 0..amps.len() {
        if i & c != 0 && i & t == 0 {
            amps.swap(i, i | t);
        }
    }
}

pub fn dm_apply_cnot(rho: &mut [Complex64], num_qubits: usize, control: usize, target: usize) {
    let dim = 1usize << num_qubits;
    let c = bit(num_qubits, control);
    let t = bit(num_qubits, target);
    for i in 0..dim {
        if i & c != 0 && i & t == 0 {
            let j = i | t;
            for col in 0..dim {
                rho.swap(i * dim + col, j * dim + col);
            }
        }
    }
    for row in 0..dim {
        let base = row * dim;
        for i in 0..dim {
            if i & c != 0 && i & t == 0 {
                rho.swap(base + i, base + (i | t));
            }
        }
    }
}

/// Linear map on the 2x2 block `[b00, b01, b10, b11]` of one qubit, i.e. a
/// single-qubit superoperator acting as `vec(B') = S vec(B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superop {
    pub m: [[Complex64; 4]; 4],
}

impl Superop {
    /// `B -> U B U^dag`.
    pub fn from_unitary(u: &Mat2) -> Self {
        Self::from_kraus(std::slice::from_ref(u))
    }

    /// `B -> sum_k K B K^dag`.
    pub fn from_kraus(ops: &[Mat2]) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for k in ops {
            for i in 0..2 {
                for j in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            m[2 * i + j][2 * a + b] += k[2 * i + a] * k[2 * j + b].conj();
                        }
                    }
                }
            }
        }
        Superop { m }
    }

    /// Map with the transposed matrix. Applied to a transposed observable `O^T` it gives
    /// the transposed Heisenberg-picture observable: `Tr[O S(ρ)] = Σ (Sᵀ Oᵀ) ∘ ρ`.
    pub fn transpose(&self) -> Superop {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = self.m[j][i];
            }
        }
        Superop { m }
    }

    /// `other ∘ self`: apply `self` first, then `other`.
    pub fn then(&self, other: &Superop) -> Superop {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..4).map(|k| other.m[i][k] * self.m[k][j]).sum();
            }
        }
        Superop { m }
    }
}

pub fn dm_apply_superop(rho: &mut [Complex64], num_qubits: usize, qubit: usize, s: &Superop) {
    let dim = 1usize << num_qubits;
    let q = bit(num_qubits, qubit);
    let m = &s.m;
    for r0 in 0..dim {
        if r0 & q != 0 {
            continue;
        }
        let r1 = r0 | q;
        for c0 in 0..dim {
            if c0 & q != 0 {
                continue;
            }
            let c1 = c0 | q;
            let idx = [r0 * dim + c0, r0 * dim + c1, r1 * dim + c0, r1 * dim + c1];
            let b = [rho[idx[0]], rho[idx[1]], rho[idx[2]], rho[idx[3]]];
            for (row, &k) in m.iter().zip(idx.iter()) {
                rho[k] = row[0] * b[0] + row[1] * b[1] + row[2] * b[2] + row[3] * b[3];
            }
        }
    }
}

/// `Σ_{r,c} obs_t[r,c] · S(ρ)[r,c]` without materializing `S(ρ)`. Only the entries of the
/// blocks touched by `S` are needed, so this is `Tr[O S(ρ)]` for `obs_t = Oᵀ`.
pub fn dm_superop_overlap(
    rho: &[Complex64],
    obs_t: &[Complex64],
    num_qubits: usize,
    qubit: usize,
    s: &Superop,
) -> Complex64 {
    let dim = 1usize << num_qubits;
    let q = bit(num_qubits, qubit);
    let m = &s.m;
    let mut acc = ZERO;
    for r0 in 0..dim {
        if r0 & q != 0 {
            continue;
        }
        let r1 = r0 | q;
        for c0 in 0..dim {
            if c0 & q != 0 {
                continue;
            }
            let c1 = c0 | q;
            let idx = [r0 * dim + c0, r0 * dim + c1, r1 * dim + c0, r1 * dim + c1];
            let b = [rho[idx[0]], rho[idx[1]], rho[idx[2]], rho[idx[3]]];
            for (row, &k) in m.iter().zip(idx.iter()) {
                acc += obs_t[k] * (row[0] * b[0] + row[1] * b[1] + row[2] * b[2] + row[3] * b[3]);
            }
        }
    }
    acc
}

pub fn sv_expectation_z(amps: &[Complex64], num_qubits: usize, qubit: usize) -> f64 {
    let s = bit(num_qubits, qubit);
    amps.iter()
        .enumerate()
        .map(|(i, a)| if i & s == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

pub fn dm_expectation_z(rho: &[Complex64], num_qubits: usize, qubit: usize) -> f64 {
    let dim = 1usize << num_qubits;
    let s = bit(num_qubits, qubit);
    (0..dim)
        .map(|i| {
            let p = rho[i * dim + i].re;
            if i & s == 0 {
                p
            } else {
                -p
            }
        })
        .sum()
}
