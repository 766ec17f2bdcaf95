//! Partition cover and disjointness, stratified split counts, IDX files, PCA fitting.

use std::collections::HashSet;

use hetqfl_core::data::{
    avgpool, load_idx, partition_noniid, split_train_test, synth_blobs, write_idx_pair, Dataset,
    Pca,
};

fn fixture(n: usize, classes: usize) -> Dataset {
    synth_blobs(n, classes, 6, 0.4, 42).unwrap()
}

#[test]
fn partition_covers_and_is_disjoint() {
    let ds = fixture(1000, 10);
    for (clients, cpc) in [(5, 2), (10, 2), (8, 3), (20, 1), (3, 4)] {
        let plan = partition_noniid(&ds, clients, cpc, 7).unwrap();
        let mut seen = HashSet::new();
        for (i, shard) in plan.assignment.iter().enumerate() {
            assert!(!shard.is_empty());
            for &s in shard {
                assert!(seen.insert(s), "sample {s} assigned twice");
                assert!(plan.client_classes[i].contains(&ds.labels[s]));
            }
            let classes: HashSet<usize> = shard.iter().map(|&s| ds.labels[s]).collect();
            assert!(classes.len() <= cpc);
        }
        let dropped: usize = plan.dropped_classes.iter().map(|&c| ds.class_counts()[c]).sum();
        assert_eq!(seen.len() + dropped, ds.len());
        if clients * cpc >= 10 {
            assert!(plan.dropped_classes.is_empty());
            assert_eq!(seen.len(), 1000);
        }
    }
}

#[test]
fn partition_is_deterministic_per_seed() {
    let ds = fixture(1000, 10);
    assert_eq!(partition_noniid(&ds, 5, 2, 3).unwrap(), partition_noniid(&ds, 5, 2, 3).unwrap());
    assert_ne!(partition_noniid(&ds, 5, 2, 3).unwrap(), partition_noniid(&ds, 5, 2, 4).unwrap());
}

#[test]
fn infeasible_partitions_are_rejected() {
    let ds = fixture(1000, 10);
    assert!(partition_noniid(&ds, 0, 2, 1).is_err());
    assert!(partition_noniid(&ds, 5, 11, 1).is_err());
    assert!(partition_noniid(&fixture(20, 10), 30, 1, 1).is_err());
}

#[test]
fn stratified_split_counts_are_exact() {
    let ds = fixture(1000, 10);
    let (train, test) = split_train_test(&ds, 0.8, 5).unwrap();
    assert_eq!((train.len(), test.len()), (800, 200));
    assert_eq!(train.class_counts(), vec![80; 10]);
    assert_eq!(test.class_counts(), vec![20; 10]);

    let ds = fixture(1003, 4);
    let (train, test) = split_train_test(&ds, 0.8, 5).unwrap();
    for ((n, tr), te) in ds.class_counts().iter().zip(train.class_counts()).zip(test.class_counts()) {
        assert_eq!(tr, (0.8 * *n as f64).floor() as usize);
        assert_eq!(tr + te, *n);
    }
    let rows: HashSet<Vec<u64>> = train
        .features
        .iter()
        .chain(&test.features)
        .map(|r| r.iter().map(|v| v.to_bits()).collect())
        .collect();
    assert_eq!(rows.len(), ds.len());
}

#[test]
fn idx_files_round_trip_and_pool() {
    let dir = tempfile::tempdir().unwrap();
    let (img, lab) = (dir.path().join("img.idx"), dir.path().join("lab.idx"));
    let images: Vec<Vec<u8>> = (0..30u8)
        .map(|k| (0..784).map(|p| ((p as u32 * 7 + k as u32 * 13) % 256) as u8).collect())
        .collect();
    let labels: Vec<u8> = (0..30).map(|k| k % 3).collect();
    write_idx_pair(&img, &lab, &images, (28, 28), &labels).unwrap();
    let ds = load_idx(&img, &lab).unwrap();
    assert_eq!(ds.len(), 30);
    assert_eq!(ds.num_classes, 3);
    assert_eq!(ds.image_shape, Some((28, 28)));
    assert_eq!(ds.features[4][10], images[4][10] as f64 / 255.0);
    let pooled = avgpool(&ds, 16).unwrap();
    assert_eq!(pooled.dim(), 16);
    let block: f64 = (0..7)
        .flat_map(|r| (0..7).map(move |c| r * 28 + c))
        .map(|p| ds.features[2][p])
        .sum::<f64>()
        / 49.0;
    assert!((pooled.features[2][0] - block).abs() < 1e-12);
}

#[test]
fn pca_statistics_come_from_the_fitting_rows_only() {
    let ds = fixture(400, 4);
    let (train, test) = split_train_test(&ds, 0.8, 9).unwrap();
    let pca = Pca::fit(&train.features, 3).unwrap();
    for (j, m) in pca.mean.iter().enumerate() {
        let want = train.features.iter().map(|r| r[j]).sum::<f64>() / train.len() as f64;
        assert!((m - want).abs() < 1e-12);
    }
    let projected = pca.transform(&test).unwrap();
    assert_eq!(projected.dim(), 3);
}
