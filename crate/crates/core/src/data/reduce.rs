use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceMethod {
    Avgpool,
    Pca,
}

/// Block-mean pooling of square images down to `out_dim = s*s` features.
pub fn avgpool(ds: &Dataset, out_dim: usize) -> Result<Dataset> {
    let (h, w) = ds
        .image_shape
        .ok_or_else(|| Error::Config("avgpool needs image-shaped rows".into()))?;
    if h != w {
        return Err(Error::Config(format!("avgpool needs square images, got {h}x{w}")));
    }
    let side = (out_dim as f64).sqrt().round() as usize;
    if side * side != out_dim || side == 0 || side > h {
        return Err(Error::Config(format!(
            "avgpool output {out_dim} is not a square grid no larger than {h}x{w}"
        )));
    }
    if h % side != 0 {
        return Err(Error::Config(format!(
            "{h}x{w} images do not divide evenly into a {side}x{side} grid"
        )));
    }
    let block = h / side;
    let area = (block * block) as f64;
    let features = ds
        .features
        .iter()
        .map(|img| {
            let mut out = vec![0.0; out_dim];
            for r in 0..h {
                for c in 0..w {
                    out[(r / block) * side + c / block] += img[r * w + c];
                }
            }
            out.iter_mut().for_each(|v| *v /= area);
            out
        })
        .collect();
    let mut pooled = ds.with_features(features)?;
    pooled.image_shape = Some((side, side));
    Ok(pooled)
}

/// Principal-component projection fitted on one dataset and applied to others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Unit-norm principal axes, strongest first.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl Pca {
    pub fn fit(rows: &[Vec<f64>], out_dim: usize) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::Empty("PCA input"));
        }
        if out_dim == 0 || out_dim > d {
            return Err(Error::Config(format!("PCA output {out_dim} not in 1..={d}")));
        }
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x / n as f64;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for r in rows {
            for i in 0..d {
                let di = r[i] - mean[i];
                for j in i..d {
                    cov[(i, j)] += di * (r[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                let v = cov[(i, j)] / n as f64;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut components = Vec::with_capacity(out_dim);
        let mut explained_variance = Vec::with_capacity(out_dim);
        for &k in order.iter().take(out_dim) {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            // fix the sign: largest-magnitude entry positive
            let lead = v
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(v);
            explained_variance.push(eig.eigenvalues[k].max(0.0));
        }
        Ok(Pca {
            mean,
            components,
            explained_variance,
        })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(w, (x, m))| w * (x - m))
                    .sum()
            })
            .collect()
    }

    pub fn transform(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.dim() != self.mean.len() {
            return Err(Error::DimensionMismatch(format!(
                "PCA fitted on {} features applied to {}",
                self.mean.len(),
                ds.dim()
            )));
        }
        ds.with_features(ds.features.iter().map(|r| self.transform_row(r)).collect())
    }
}

/// Reduces `ds` to `out_dim` features. PCA is fitted on `ds` itself; fit a [`Pca`] on the
/// training split and apply it to the test split to avoid leakage.
pub fn reduce_dims(ds: &Dataset, out_dim: usize, method: ReduceMethod) -> Result<Dataset> {
    if out_dim > ds.dim() {
        return Err(Error::Config(format!(
            "cannot reduce {} features to {out_dim}",
            ds.dim()
        )));
    }
    match method {
        ReduceMethod::Avgpool => avgpool(ds, out_dim),
        ReduceMethod::Pca => Pca::fit(&ds.features, out_dim)?.transform(ds),
    }
}
