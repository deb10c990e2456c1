use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::memo::FlMemo;
use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;

/// Default accuracy parameter for stochastic greedy.
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Naive,
    Lazy,
    Stochastic,
}

/// Greedy picks and the marginal gain each had when it was picked.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyResult {
    pub order: Vec<usize>,
    pub gains: Vec<f64>,
    pub algorithm: Algorithm,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
}

impl GreedyResult {
    /// `f(order)`, by telescoping.
    pub fn value(&self) -> f64 {
        self.gains.iter().sum()
    }
}

fn check_budget(kernel: &SimilarityKernel, budget: usize) -> Result<()> {
    let m = kernel.size();
    if budget == 0 || budget > m {
        return Err(Error::invalid(format!("budget must be in 1..={m}, got {budget}")));
    }
    Ok(())
}

/// True if `(ga, a)` beats `(gb, b)`: larger gain, then lower index.
#[inline]
fn beats(ga: f64, a: usize, gb: f64, b: usize) -> bool {
    ga > gb || (ga == gb && a < b)
}

/// Exhaustive greedy: every step scans all remaining candidates.
pub fn naive_greedy(kernel: &SimilarityKernel, budget: usize) -> Result<GreedyResult> {
    check_budget(kernel, budget)?;
    let m = kernel.size();
    let mut memo = FlMemo::new(m);
    let mut gains = Vec::with_capacity(budget);
    for _ in 0..budget {
        let mut best: Option<(f64, usize)> = None;
        for e in (0..m).filter(|&e| !memo.contains(e)) {
            let g = memo.gain_unchecked(kernel, e);
            if best.is_none_or(|(bg, be)| beats(g, e, bg, be)) {
                best = Some((g, e));
            }
        }
        let (g, e) = best.expect("budget ≤ m leaves a candidate");
        memo.insert_unchecked(kernel, e);
        gains.push(g);
    }
    Ok(GreedyResult {
        order: memo.selected().to_vec(),
        gains,
        algorithm: Algorithm::Naive,
        epsilon: None,
        seed: None,
    })
}

#[derive(Debug, PartialEq)]
struct Stale {
    gain: f64,
    index: usize,
}

impl Eq for Stale {}

impl Ord for Stale {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Stale {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minoux's accelerated greedy. Produces exactly the naive sequence.
///
/// Stale gains are upper bounds on fresh ones (diminishing returns), so a
/// popped candidate whose refreshed gain still beats the next stale entry is
/// the true argmax.
pub fn lazy_greedy(kernel: &SimilarityKernel, budget: usize) -> Result<GreedyResult> {
    check_budget(kernel, budget)?;
    let m = kernel.size();
    let mut memo = FlMemo::new(m);
    let mut heap: BinaryHeap<Stale> = (0..m)
        .map(|e| Stale {
            gain: memo.gain_unchecked(kernel, e),
            index: e,
        })
        .collect();
    let mut gains = Vec::with_capacity(budget);
    // Gains computed against the current memo need no refresh.
    let mut fresh_at = vec![0usize; m];
    while gains.len() < budget {
        let top = heap.pop().expect("budget ≤ m leaves a candidate");
        let step = gains.len();
        if fresh_at[top.index] == step {
            memo.insert_unchecked(kernel, top.index);
            gains.push(top.gain);
            continue;
        }
        let g = memo.gain_unchecked(kernel, top.index);
        fresh_at[top.index] = step;
        let wins = heap
            .peek()
            .is_none_or(|next| beats(g, top.index, next.gain, next.index));
        if wins {
            memo.insert_unchecked(kernel, top.index);
            gains.push(g);
        } else {
            heap.push(Stale {
                gain: g,
                index: top.index,
            });
        }
    }
    Ok(GreedyResult {
        order: memo.selected().to_vec(),
        gains,
        algorithm: Algorithm::Lazy,
        epsilon: None,
        seed: None,
    })
}

/// Per-step candidate sample size `ceil((m / b) · ln(1/ε))`, at least 1.
pub fn stochastic_sample_size(m: usize, budget: usize, epsilon: f64) -> usize {
    let s = (m as f64 / budget as f64) * (1.0 / epsilon).ln();
    (s.ceil() as usize).max(1)
}

/// Lazier-than-lazy greedy: each step draws a uniform sample of the
/// remaining candidates and takes the sample's best, refreshing stale
/// bounds only as far as needed. When the sample covers everything left,
/// the pick is the naive one.
pub fn stochastic_greedy(
    kernel: &SimilarityKernel,
    budget: usize,
    epsilon: f64,
    seed: u64,
) -> Result<GreedyResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must be in (0, 1), got {epsilon}")));
    }
    check_budget(kernel, budget)?;
    let m = kernel.size();
    let sample_size = stochastic_sample_size(m, budget, epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut memo = FlMemo::new(m);
    let mut upper = vec![f64::INFINITY; m];
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut gains = Vec::with_capacity(budget);
    let mut sample = Vec::with_capacity(sample_size.min(m));

    while gains.len() < budget {
        let left = remaining.len();
        let s = sample_size.min(left);
        if s < left {
            for t in 0..s {
                let pick = rng.random_range(t..left);
                remaining.swap(t, pick);
            }
        }
        sample.clear();
        sample.extend(remaining[..s].iter().map(|&e| (e, upper[e])));
        sample.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut best: Option<(f64, usize)> = None;
        for &(e, bound) in &sample {
            if let Some((bg, be)) = best {
                if !beats(bound, e, bg, be) {
                    break;
                }
            }
            let g = memo.gain_unchecked(kernel, e);
            upper[e] = g;
            if best.is_none_or(|(bg, be)| beats(g, e, bg, be)) {
                best = Some((g, e));
            }
        }
        let (g, e) = best.expect("sample is non-empty");
        memo.insert_unchecked(kernel, e);
        gains.push(g);
        let at = remaining.iter().position(|&r| r == e).expect("pick is remaining");
        remaining.swap_remove(at);
    }
    Ok(GreedyResult {
        order: memo.selected().to_vec(),
        gains,
        algorithm: Algorithm::Stochastic,
        epsilon: Some(epsilon),
        seed: Some(seed),
    })
}

/// Stochastic greedy run to exhaustion, so that every element of the block
/// gets a gain.
pub fn full_ordering(kernel: &SimilarityKernel, seed: u64, epsilon: f64) -> Result<GreedyResult> {
    stochastic_greedy(kernel, kernel.size(), epsilon, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::fl_evaluate;

    fn example() -> SimilarityKernel {
        SimilarityKernel::from_dense(3, vec![1.0, 0.5, 0.2, 0.5, 1.0, 0.9, 0.2, 0.9, 1.0]).unwrap()
    }

    fn identity(m: usize) -> SimilarityKernel {
        let mut v = vec![0.0; m * m];
        for i in 0..m {
            v[i * m + i] = 1.0;
        }
        SimilarityKernel::from_dense(m, v).unwrap()
    }

    #[test]
    fn naive_example() {
        let r = naive_greedy(&example(), 2).unwrap();
        assert_eq!(r.order, vec![1, 0]);
        assert!((r.gains[0] - 2.4).abs() < 1e-6);
        assert!((r.gains[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn identity_ties_go_low() {
        let r = naive_greedy(&identity(3), 3).unwrap();
        assert_eq!(r.order, vec![0, 1, 2]);
        assert_eq!(r.gains, vec![1.0; 3]);
        assert_eq!(lazy_greedy(&identity(3), 3).unwrap().order, vec![0, 1, 2]);
    }

    #[test]
    fn budget_errors() {
        let k = example();
        assert!(naive_greedy(&k, 0).is_err());
        assert!(lazy_greedy(&k, 4).is_err());
        assert!(stochastic_greedy(&k, 4, 0.1, 0).is_err());
        assert!(stochastic_greedy(&k, 2, 0.0, 0).is_err());
        assert!(stochastic_greedy(&k, 2, 1.0, 0).is_err());
        assert!(stochastic_greedy(&k, 2, f64::NAN, 0).is_err());
    }

    #[test]
    fn lazy_single_and_all_ones() {
        let one = SimilarityKernel::from_dense(1, vec![1.0]).unwrap();
        assert_eq!(lazy_greedy(&one, 1).unwrap().order, vec![0]);

        let ones = SimilarityKernel::from_dense(4, vec![1.0; 16]).unwrap();
        let r = lazy_greedy(&ones, 4).unwrap();
        assert_eq!(r.gains, vec![4.0, 0.0, 0.0, 0.0]);
        assert_eq!(r.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn sample_size_formula() {
        assert_eq!(stochastic_sample_size(100, 10, 0.05), 30);
        assert_eq!(stochastic_sample_size(5, 5, 0.9), 1);
    }

    #[test]
    fn stochastic_is_seeded() {
        let f = crate::features::FeatureMatrix::new(
            6,
            2,
            vec![1.0, 0.0, 0.9, 0.1, 0.0, 1.0, 0.2, 0.8, 0.5, 0.5, 0.7, 0.3],
        )
        .unwrap();
        let k = crate::kernel::cosine_kernel(&f).unwrap();
        let a = full_ordering(&k, 42, 0.3).unwrap();
        let b = full_ordering(&k, 42, 0.3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.order.len(), 6);
        assert!(a.gains.iter().all(|&g| g >= 0.0));
        let all: Vec<usize> = (0..6).collect();
        let total = fl_evaluate(&k, &all).unwrap();
        assert!((a.value() - total).abs() <= 1e-6 * total);
    }

    #[test]
    fn identity_full_ordering() {
        let r = full_ordering(&identity(7), 3, DEFAULT_EPSILON).unwrap();
        assert_eq!(r.gains, vec![1.0; 7]);
        let mut o = r.order.clone();
        o.sort_unstable();
        assert_eq!(o, (0..7).collect::<Vec<_>>());
    }
}
