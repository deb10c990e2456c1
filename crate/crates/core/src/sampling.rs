//! Gain-proportional importance sampling.
//!
//! Greedy gains become probabilities through a second-order Taylor
//! approximation of softmax, `P_i ∝ 1 + g_i + g_i²/2`. The weight equals
//! `((g + 1)² + 1) / 2`, so it is at least ½ for any real gain and every
//! element keeps a chance of being drawn.
//!
//! Subsets are drawn without replacement with exponential keys
//! (Efraimidis–Spirakis): draw `u_i ~ U(0, 1)`, keep the `count` largest
//! `u_i^(1/P_i)`.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    probabilities: Vec<f64>,
    gains: Vec<f64>,
}

impl SamplingDistribution {
    /// Rebuilds a distribution from stored probabilities, checking that they
    /// are positive and sum to one.
    pub fn from_probabilities(probabilities: Vec<f64>, gains: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() || probabilities.len() != gains.len() {
            return Err(Error::invalid("probabilities and gains must be non-empty and aligned"));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::invalid("probabilities must be finite and positive"));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("probabilities sum to {total}")));
        }
        Ok(SamplingDistribution { probabilities, gains })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

#[inline]
fn taylor_weight(g: f64) -> f64 {
    let s = g + 1.0;
    0.5 * (s * s + 1.0)
}

pub fn taylor_softmax(gains: &[f64]) -> Result<SamplingDistribution> {
    if gains.is_empty() {
        return Err(Error::invalid("taylor_softmax of an empty gain vector"));
    }
    if let Some(i) = gains.iter().position(|g| !g.is_finite()) {
        return Err(Error::invalid(format!("gain {i} is not finite")));
    }
    let weights: Vec<f64> = gains.iter().map(|&g| taylor_weight(g)).collect();
    let total: f64 = weights.iter().sum();
    if !total.is_finite() {
        return Err(Error::invalid("gains too large: Taylor weights overflow"));
    }
    Ok(SamplingDistribution {
        probabilities: weights.into_iter().map(|w| w / total).collect(),
        gains: gains.to_vec(),
    })
}

/// Draws `count` distinct indices, ascending.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    dist: &SamplingDistribution,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let m = dist.len();
    if count == 0 || count > m {
        return Err(Error::invalid(format!("sample count must be in 1..={m}, got {count}")));
    }
    // ln(u^(1/p)) = ln(u)/p preserves the key order without underflow.
    let mut keys: Vec<(f64, usize)> = dist
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let u: f64 = rng.sample(Open01);
            (u.ln() / p, i)
        })
        .collect();
    if count < m {
        keys.select_nth_unstable_by(count - 1, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        keys.truncate(count);
    }
    let mut out: Vec<usize> = keys.into_iter().map(|(_, i)| i).collect();
    out.sort_unstable();
    Ok(out)
}

/// [`sample_without_replacement`] with a fresh ChaCha8 stream.
pub fn sample_seeded(dist: &SamplingDistribution, count: usize, seed: u64) -> Result<Vec<usize>> {
    sample_without_replacement(dist, count, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derived_two_gains() {
        let d = taylor_softmax(&[0.0, 1.0]).unwrap();
        assert!((d.probabilities()[0] - 1.0 / 3.5).abs() < 1e-12);
        assert!((d.probabilities()[1] - 2.5 / 3.5).abs() < 1e-12);
    }

    #[test]
    fn singleton_and_uniform() {
        assert_eq!(taylor_softmax(&[-1.0]).unwrap().probabilities(), &[1.0]);
        let d = taylor_softmax(&[3.7; 9]).unwrap();
        for p in d.probabilities() {
            assert!((p - 1.0 / 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_gains() {
        assert!(taylor_softmax(&[]).is_err());
        assert!(taylor_softmax(&[0.0, f64::NAN]).is_err());
        assert!(taylor_softmax(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn exhaustive_and_bad_counts() {
        let d = taylor_softmax(&[0.0, 5.0, 1.0, 2.0]).unwrap();
        assert_eq!(sample_seeded(&d, 4, 1).unwrap(), vec![0, 1, 2, 3]);
        assert!(sample_seeded(&d, 5, 1).is_err());
        assert!(sample_seeded(&d, 0, 1).is_err());
    }

    #[test]
    fn heavy_item_dominates() {
        let d = taylor_softmax(&[1000.0, 0.0]).unwrap();
        let mut hits = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            if sample_without_replacement(&d, 1, &mut rng).unwrap() == [0] {
                hits += 1;
            }
        }
        assert!(hits >= 9_900, "{hits}");
    }

    #[test]
    fn from_probabilities_checks() {
        assert!(SamplingDistribution::from_probabilities(vec![0.5, 0.5], vec![0.0, 0.0]).is_ok());
        assert!(SamplingDistribution::from_probabilities(vec![0.5, 0.6], vec![0.0, 0.0]).is_err());
        assert!(SamplingDistribution::from_probabilities(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(SamplingDistribution::from_probabilities(vec![1.0], vec![]).is_err());
    }

    proptest! {
        #[test]
        fn weights_are_positive(gains in proptest::collection::vec(-1e6f64..1e6, 1..50)) {
            let d = taylor_softmax(&gains).unwrap();
            prop_assert!(d.probabilities().iter().all(|&p| p > 0.0));
            let total: f64 = d.probabilities().iter().sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn samples_are_distinct_and_seeded(
            gains in proptest::collection::vec(0.0f64..10.0, 1..40),
            frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let d = taylor_softmax(&gains).unwrap();
            let count = 1 + ((d.len() - 1) as f64 * frac) as usize;
            let a = sample_seeded(&d, count, seed).unwrap();
            prop_assert_eq!(a.len(), count);
            prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(a, sample_seeded(&d, count, seed).unwrap());
        }
    }
}
