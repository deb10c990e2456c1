//! Reference implementations used as oracles. Nothing here calls into the
//! facility-location or greedy code under test.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use subsel::features::FeatureMatrix;
use subsel::kernel::{cosine_kernel, SimilarityKernel};

pub fn gaussian_features<R: Rng>(rng: &mut R, n: usize, d: usize) -> FeatureMatrix {
    let values = (0..n * d).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
    FeatureMatrix::new(n, d, values).unwrap()
}

/// Clipped cosine kernel over `m` random Gaussian vectors in a small
/// dimension, so that a good share of pairs is clipped to zero.
pub fn random_kernel<R: Rng>(rng: &mut R, m: usize) -> SimilarityKernel {
    let d = rng.random_range(2..=6);
    cosine_kernel(&gaussian_features(rng, m, d)).unwrap()
}

/// `Σ_i max_{j∈set} K_ij` with plain loops.
pub fn brute_fl(k: &SimilarityKernel, set: &[usize]) -> f64 {
    let m = k.size();
    let mut total = 0.0;
    for i in 0..m {
        let mut best = 0.0f64;
        for &j in set {
            let v = k.values()[i * m + j] as f64;
            if v > best {
                best = v;
            }
        }
        total += best;
    }
    total
}

/// Best facility-location value over all subsets of exactly `b` elements.
pub fn brute_opt(k: &SimilarityKernel, b: usize) -> f64 {
    let m = k.size();
    assert!(m <= 20);
    let mut best = 0.0f64;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != b {
            continue;
        }
        let set: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        best = best.max(brute_fl(k, &set));
    }
    best
}

/// Direct clipped cosine between two raw rows.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum();
    let na: f64 = a.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).max(0.0)
    }
}

/// Facility location of `subset` over the whole corpus, computed inside each
/// block of an audit partition: `Σ_blocks Σ_{i∈block} max_{j∈subset∩block} cos(i, j)`.
pub fn blockwise_fl(features: &FeatureMatrix, audit_blocks: &[Vec<usize>], subset: &[usize]) -> f64 {
    let mut chosen = vec![false; features.n()];
    for &s in subset {
        chosen[s] = true;
    }
    let inv_norm: Vec<f64> = features
        .rows()
        .map(|r| {
            let nn = r.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
            if nn == 0.0 { 0.0 } else { 1.0 / nn }
        })
        .collect();
    let mut total = 0.0;
    for block in audit_blocks {
        let members: Vec<usize> = block.iter().copied().filter(|&j| chosen[j]).collect();
        for &i in block {
            let xi = features.row(i);
            let mut best = 0.0f64;
            for &j in &members {
                let c = if i == j {
                    1.0
                } else {
                    let dot: f64 = xi.iter().zip(features.row(j)).map(|(&x, &y)| x as f64 * y as f64).sum();
                    dot * inv_norm[i] * inv_norm[j]
                };
                if c > best {
                    best = c;
                }
            }
            total += best;
        }
    }
    total
}
