mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_fl, gaussian_features};
use subsel::features::{normalize_rows, FeatureMatrix};
use subsel::kernel::{cosine_kernel_rows, KernelOptions};
use subsel::partition::{
    build_orderings, make_partition, split_budget, union_sample, BudgetSplit, BuildOptions,
    OrderingArtifact,
};
use subsel::Error;

fn corpus(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    normalize_rows(gaussian_features(&mut ChaCha8Rng::seed_from_u64(seed), n, d)).matrix
}

#[test]
fn orderings_cover_every_index_once() {
    let f = corpus(12, 4, 1);
    let plan = make_partition(12, 3, 5).unwrap();
    let artifact = build_orderings(&f, &plan, &BuildOptions::new(5)).unwrap();
    assert_eq!(artifact.blocks().len(), 3);
    let mut all: Vec<usize> = artifact.blocks().iter().flat_map(|b| b.order().to_vec()).collect();
    all.sort_unstable();
    assert_eq!(all, (0..12).collect::<Vec<_>>());
    for b in artifact.blocks() {
        let total: f64 = b.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(b.gains().iter().all(|&g| g >= 0.0));
    }
}

#[test]
fn block_gains_telescope_to_full_block_value() {
    let f = corpus(300, 8, 2);
    let plan = make_partition(300, 4, 9).unwrap();
    let artifact = build_orderings(&f, &plan, &BuildOptions::new(9)).unwrap();
    for (b, ordering) in artifact.blocks().iter().enumerate() {
        let rows = plan.block(b);
        let kernel = cosine_kernel_rows(&f, rows, &KernelOptions::default()).unwrap();
        let all: Vec<usize> = (0..rows.len()).collect();
        let full = brute_fl(&kernel, &all);
        let sum: f64 = ordering.gains().iter().sum();
        assert!((sum - full).abs() <= 1e-6 * full, "block {b}: {sum} vs {full}");
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let f = corpus(400, 6, 3);
    let plan = make_partition(400, 5, 1).unwrap();
    let one = build_orderings(&f, &plan, &BuildOptions::new(1).workers(1)).unwrap();
    let eight = build_orderings(&f, &plan, &BuildOptions::new(1).workers(8)).unwrap();
    assert_eq!(one, eight);
    assert_eq!(one.to_json().unwrap(), eight.to_json().unwrap());
}

#[test]
fn memory_admission() {
    let f = corpus(40, 3, 4);
    let plan = make_partition(40, 4, 0).unwrap();
    // Four blocks of 10, two workers: 2·10²·4 = 800 bytes.
    let opts = BuildOptions::new(0).workers(2).memory_budget(799);
    match build_orderings(&f, &plan, &opts) {
        Err(Error::Capacity { required, available }) => {
            assert_eq!(required, 800);
            assert_eq!(available, 799);
        }
        other => panic!("expected capacity error, got {other:?}"),
    }
    assert!(build_orderings(&f, &plan, &opts.clone().memory_budget(800)).is_ok());
    assert!(build_orderings(&f, &plan, &BuildOptions::new(0).memory_budget(1)).unwrap_err().is_capacity());
}

#[test]
fn rejects_bad_options() {
    let f = corpus(20, 3, 5);
    let plan = make_partition(20, 2, 0).unwrap();
    assert!(build_orderings(&f, &plan, &BuildOptions::new(0).epsilon(1.0)).is_err());
    assert!(build_orderings(&f, &plan, &BuildOptions::new(0).workers(0)).is_err());
    let other = make_partition(21, 2, 0).unwrap();
    assert!(build_orderings(&f, &other, &BuildOptions::new(0)).is_err());
}

#[test]
fn artifact_json_round_trip() {
    let f = corpus(50, 5, 6);
    let plan = make_partition(50, 3, 8).unwrap();
    let artifact = build_orderings(&f, &plan, &BuildOptions::new(8)).unwrap();
    let json = artifact.to_json().unwrap();
    let back = OrderingArtifact::from_json(&json).unwrap();
    assert_eq!(back, artifact);
    assert_eq!(back.to_json().unwrap(), json);

    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["plan"]["N_P"], 3);
    assert_eq!(v["plan"]["n"], 50);
    assert!(v["config_fingerprint"].as_str().unwrap().len() == 64);
    assert!(v["blocks"][0]["global_indices_in_greedy_order"].is_array());
}

#[test]
fn artifact_json_is_validated() {
    let f = corpus(30, 4, 7);
    let plan = make_partition(30, 3, 2).unwrap();
    let json = build_orderings(&f, &plan, &BuildOptions::new(2)).unwrap().to_json().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["plan"]["seed"] = 3.into();
    assert!(OrderingArtifact::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
    v["blocks"][1]["probabilities"][0] = 0.9.into();
    assert!(OrderingArtifact::from_json(&v.to_string()).is_err());
}

#[test]
fn union_sample_sizes_and_determinism() {
    let f = corpus(64, 5, 8);
    let plan = make_partition(64, 4, 3).unwrap();
    let artifact = build_orderings(&f, &plan, &BuildOptions::new(3)).unwrap();
    for k in [4, 5, 17, 33, 64] {
        let split = split_budget(k, &plan).unwrap();
        let s = union_sample(&artifact, &split, 77).unwrap();
        assert_eq!(s.len(), k);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, union_sample(&artifact, &split, 77).unwrap());
    }
    let all = union_sample(&artifact, &split_budget(64, &plan).unwrap(), 1).unwrap();
    assert_eq!(all, (0..64).collect::<Vec<_>>());

    let per_block = union_sample(&artifact, &split_budget(4, &plan).unwrap(), 1).unwrap();
    for b in 0..4 {
        assert_eq!(per_block.iter().filter(|&&g| plan.locate(g).unwrap().0 == b).count(), 1);
    }
}

#[test]
fn union_sample_rejects_inconsistent_split() {
    let f = corpus(20, 3, 9);
    let plan = make_partition(20, 2, 0).unwrap();
    let artifact = build_orderings(&f, &plan, &BuildOptions::new(0)).unwrap();
    let bad = BudgetSplit {
        total: 6,
        per_block: vec![2, 2, 2],
    };
    assert!(union_sample(&artifact, &bad, 0).is_err());
    let bad = BudgetSplit {
        total: 5,
        per_block: vec![3, 3],
    };
    assert!(union_sample(&artifact, &bad, 0).is_err());
    let too_big = BudgetSplit {
        total: 12,
        per_block: vec![11, 1],
    };
    assert!(union_sample(&artifact, &too_big, 0).is_err());
}

#[test]
fn end_to_end_determinism() {
    let run = || {
        let f = corpus(200, 6, 10);
        let plan = make_partition(200, 4, 42).unwrap();
        let artifact = build_orderings(&f, &plan, &BuildOptions::new(42)).unwrap();
        union_sample(&artifact, &split_budget(50, &plan).unwrap(), 42).unwrap()
    };
    assert_eq!(run(), run());
}
