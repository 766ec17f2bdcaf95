use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::seed::rng_for;
use crate::{Error, Result};

/// Client shards of one dataset, each drawn from a fixed subset of classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub num_clients: usize,
    pub classes_per_client: usize,
    pub seed: u64,
    /// Sample indices per client, ascending.
    pub assignment: Vec<Vec<usize>>,
    /// Classes each client was allowed to draw from.
    pub client_classes: Vec<Vec<usize>>,
    /// Classes no client holds when `num_clients * classes_per_client` is smaller than the
    /// number of classes present; their samples are left out of every shard.
    pub dropped_classes: Vec<usize>,
}

impl PartitionPlan {
    pub fn shard(&self, ds: &Dataset, client: usize) -> Dataset {
        ds.subset(&self.assignment[client])
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.assignment.iter().map(Vec::len).collect()
    }
}

fn indices_by_class(ds: &Dataset) -> Vec<Vec<usize>> {
    let mut by_class = vec![Vec::new(); ds.num_classes];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    by_class
}

/// Label-skewed partition. Classes present in `ds` are shuffled and dealt round-robin so
/// that client `i` holds `classes_per_client` consecutive classes of that order; each
/// class's samples are then split evenly among its holders. Classes beyond the first
/// `num_clients * classes_per_client` of the shuffled order are dropped.
pub fn partition_noniid(
    ds: &Dataset,
    num_clients: usize,
    classes_per_client: usize,
    seed: u64,
) -> Result<PartitionPlan> {
    if num_clients == 0 || num_clients > ds.len() {
        return Err(Error::Infeasible(format!(
            "{num_clients} clients for {} samples",
            ds.len()
        )));
    }
    if classes_per_client == 0 || classes_per_client > ds.num_classes {
        return Err(Error::Infeasible(format!(
            "{classes_per_client} classes per client with {} classes",
            ds.num_classes
        )));
    }
    let mut rng = rng_for(&[seed, 0x5041]);
    let mut by_class = indices_by_class(ds);
    let mut present: Vec<usize> = (0..ds.num_classes)
        .filter(|&c| !by_class[c].is_empty())
        .collect();
    present.shuffle(&mut rng);
    let k = classes_per_client.min(present.len());
    let dropped_classes = if num_clients * k < present.len() {
        let mut d = present.split_off(num_clients * k);
        d.sort_unstable();
        d
    } else {
        Vec::new()
    };

    let client_classes: Vec<Vec<usize>> = (0..num_clients)
        .map(|i| (0..k).map(|j| present[(i * k + j) % present.len()]).collect())
        .collect();
    let mut holders = vec![Vec::new(); ds.num_classes];
    for (i, classes) in client_classes.iter().enumerate() {
        for &c in classes {
            holders[c].push(i);
        }
    }

    let mut assignment = vec![Vec::new(); num_clients];
    for &c in &present {
        let pool = &mut by_class[c];
        pool.shuffle(&mut rng);
        let h = &holders[c];
        let (base, extra) = (pool.len() / h.len(), pool.len() % h.len());
        let mut start = 0;
        for (r, &client) in h.iter().enumerate() {
            let take = base + usize::from(r < extra);
            assignment[client].extend_from_slice(&pool[start..start + take]);
            start += take;
        }
    }
    if let Some(empty) = assignment.iter().position(Vec::is_empty) {
        return Err(Error::Infeasible(format!("client {empty} received no samples")));
    }
    for a in &mut assignment {
        a.sort_unstable();
    }
    Ok(PartitionPlan {
        num_clients,
        classes_per_client,
        seed,
        assignment,
        client_classes,
        dropped_classes,
    })
}

fn stratified(ds: &Dataset, fraction: f64, seed: u64, strict: bool) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::OutOfRange {
            name: "train_fraction",
            value: fraction,
            expected: "(0, 1)",
        });
    }
    let mut rng = rng_for(&[seed, 0x5350]);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in indices_by_class(ds).into_iter().enumerate() {
        let n = idx.len();
        if n == 0 {
            continue;
        }
        if n < 2 && strict {
            return Err(Error::Infeasible(format!(
                "class {c} has {n} sample(s); stratified splitting needs at least 2"
            )));
        }
        idx.shuffle(&mut rng);
        let mut cut = (fraction * n as f64 + 1e-9).floor() as usize;
        if n >= 2 {
            cut = cut.clamp(1, n - 1);
        }
        train.extend_from_slice(&idx[..cut]);
        test.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Stratified split: each class contributes `⌊fraction·n_c⌋` samples to the training
/// side (at least one to each side). Fails if a class has fewer than two samples.
pub fn split_train_test(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    stratified(ds, train_fraction, seed, true)
}

/// Like [`split_train_test`] but a singleton class goes entirely to the first part.
/// Used for per-client validation holdouts on small shards.
pub fn holdout_split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    stratified(ds, train_fraction, seed, false)
}
