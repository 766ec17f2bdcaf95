use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::Dataset;
use crate::seed::rng_for;
use crate::{Error, Result};

/// Gaussian clusters around centers drawn uniformly from `[-1, 1]^dim`. Labels cycle
/// `0, 1, ..., C-1`, so class counts differ by at most one.
pub fn synth_blobs(
    n: usize,
    num_classes: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes == 0 || n < num_classes {
        return Err(Error::Config(format!(
            "need n >= num_classes >= 1 (n={n}, classes={num_classes})"
        )));
    }
    if dim == 0 || !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::Config(format!("invalid blobs dim={dim} spread={spread}")));
    }
    let mut rng = rng_for(&[seed, 0xB10B]);
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % num_classes;
        features.push(
            centers[c]
                .iter()
                .map(|m| m + spread * noise.sample(&mut rng))
                .collect(),
        );
        labels.push(c);
    }
    Dataset::new(
        features,
        labels,
        num_classes,
        format!("blobs(n={n},classes={num_classes},dim={dim},spread={spread},seed={seed})"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let a = synth_blobs(100, 2, 5, 0.3, 7).unwrap();
        assert_eq!(a, synth_blobs(100, 2, 5, 0.3, 7).unwrap());
        assert_ne!(a, synth_blobs(100, 2, 5, 0.3, 8).unwrap());
        assert_eq!(a.class_counts(), vec![50, 50]);
        let b = synth_blobs(10, 3, 2, 0.1, 1).unwrap();
        assert_eq!(b.class_counts(), vec![4, 3, 3]);
        assert!(synth_blobs(2, 3, 2, 0.1, 1).is_err());
    }
}
