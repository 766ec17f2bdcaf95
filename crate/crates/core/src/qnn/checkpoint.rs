//! Binary model checkpoints.
//!
//! Layout (all integers `u32`, all reals `f64`, little-endian):
//!
//! ```text
//! magic "HQFL" | version = 1 | q | L | C
//! angles[L*q*3] (row-major layer, qubit, axis)
//! pruned[L*q*3] as u8 (0 or 1)
//! weights[C*q] (row-major class, qubit)
//! bias[C]
//! ```

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{Read, Write};

use super::model::{PqcModel, AXES};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HQFL";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(model: &PqcModel, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    for dim in [model.num_qubits(), model.num_layers(), model.num_classes()] {
        w.write_u32::<LittleEndian>(dim as u32)?;
    }
    for &a in model.angles() {
        w.write_f64::<LittleEndian>(a)?;
    }
    for &p in model.pruned() {
        w.write_u8(u8::from(p))?;
    }
    for &x in model.weights().iter().chain(model.bias()) {
        w.write_f64::<LittleEndian>(x)?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<PqcModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a model checkpoint (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let q = r.read_u32::<LittleEndian>()? as usize;
    let l = r.read_u32::<LittleEndian>()? as usize;
    let c = r.read_u32::<LittleEndian>()? as usize;
    if q == 0 || q > 24 || l == 0 || c == 0 || l > 1 << 16 || c > 1 << 16 {
        return Err(Error::Format(format!("implausible model shape q={q} L={l} C={c}")));
    }
    let n = l * q * AXES;
    let read_f64s = |r: &mut R, len: usize| -> Result<Vec<f64>> {
        (0..len)
            .map(|_| Ok(r.read_f64::<LittleEndian>()?))
            .collect()
    };
    let angles = read_f64s(&mut r, n)?;
    let pruned = (0..n)
        .map(|_| match r.read_u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::Format(format!("bad prune flag {b}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    let weights = read_f64s(&mut r, c * q)?;
    let bias = read_f64s(&mut r, c)?;
    PqcModel::from_raw(q, l, c, angles, pruned, weights, bias)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnn::{build_pqc, prune_gates};

    #[test]
    fn round_trip() {
        let mut m = prune_gates(&build_pqc(3, 2, 4, 1).unwrap(), 0.5);
        m.set_decode((0..12).map(|i| i as f64 * 0.1).collect(), vec![1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 16 + 18 * 8 + 18 + 16 * 8);
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(read_checkpoint(&buf[..]).unwrap(), m);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_checkpoint(&b"NOPE\x01\x00\x00\x00"[..]).is_err());
        let mut buf = Vec::new();
        write_checkpoint(&build_pqc(1, 1, 2, 0).unwrap(), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_checkpoint(&buf[..]).is_err());
    }
}
