use byteorder::{BigEndian, ReadBytesExt, WriteBytesExt};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Dataset;
use crate::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images as rows of `rows*cols` bytes, plus `(rows, cols)`.
pub fn read_idx_images<R: Read>(mut r: R) -> Result<(Vec<Vec<u8>>, (usize, usize))> {
    let magic = r.read_u32::<BigEndian>()?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let n = r.read_u32::<BigEndian>()? as usize;
    let rows = r.read_u32::<BigEndian>()? as usize;
    let cols = r.read_u32::<BigEndian>()? as usize;
    let mut images = Vec::with_capacity(n.min(1 << 20));
    for i in 0..n {
        let mut px = vec![0u8; rows * cols];
        r.read_exact(&mut px).map_err(|e| truncated(e, "image", i))?;
        images.push(px);
    }
    Ok((images, (rows, cols)))
}

pub fn read_idx_labels<R: Read>(mut r: R) -> Result<Vec<u8>> {
    let magic = r.read_u32::<BigEndian>()?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let n = r.read_u32::<BigEndian>()? as usize;
    let mut labels = vec![0u8; n];
    r.read_exact(&mut labels)
        .map_err(|e| truncated(e, "label", 0))?;
    Ok(labels)
}

fn truncated(e: std::io::Error, what: &str, i: usize) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format(format!("truncated IDX file while reading {what} {i}"))
    } else {
        Error::Io(e)
    }
}

/// Loads an IDX image/label pair; pixels are scaled to `[0, 1]` and the class count
/// is `max(label) + 1`.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (images, shape) = read_idx_images(BufReader::new(File::open(images_path.as_ref())?))?;
    let labels = read_idx_labels(BufReader::new(File::open(labels_path.as_ref())?))?;
    if images.len() != labels.len() {
        return Err(Error::Format(format!(
            "{} images but {} labels",
            images.len(),
            labels.len()
        )));
    }
    let num_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let features = images
        .into_iter()
        .map(|px| px.into_iter().map(|p| p as f64 / 255.0).collect())
        .collect();
    let mut ds = Dataset::new(
        features,
        labels.into_iter().map(usize::from).collect(),
        num_classes,
        format!("idx:{}", images_path.as_ref().display()),
    )?;
    ds.image_shape = Some(shape);
    Ok(ds)
}

pub fn write_idx_images<W: Write>(mut w: W, images: &[Vec<u8>], shape: (usize, usize)) -> Result<()> {
    w.write_u32::<BigEndian>(IMAGES_MAGIC)?;
    w.write_u32::<BigEndian>(images.len() as u32)?;
    w.write_u32::<BigEndian>(shape.0 as u32)?;
    w.write_u32::<BigEndian>(shape.1 as u32)?;
    for img in images {
        if img.len() != shape.0 * shape.1 {
            return Err(Error::DimensionMismatch("image size does not match shape".into()));
        }
        w.write_all(img)?;
    }
    Ok(())
}

pub fn write_idx_labels<W: Write>(mut w: W, labels: &[u8]) -> Result<()> {
    w.write_u32::<BigEndian>(LABELS_MAGIC)?;
    w.write_u32::<BigEndian>(labels.len() as u32)?;
    w.write_all(labels)?;
    Ok(())
}

/// Writes an image/label pair to disk. Test fixtures use this.
pub fn write_idx_pair(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    images: &[Vec<u8>],
    shape: (usize, usize),
    labels: &[u8],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(images_path)?);
    write_idx_images(&mut w, images, shape)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(labels_path)?);
    write_idx_labels(&mut w, labels)?;
    w.flush()?;
    Ok(())
}
