//! Partitioned selection.
//!
//! The corpus is shuffled into `N_P` blocks of (nearly) equal size. Every
//! block gets its own kernel, full greedy ordering and sampling
//! distribution, built in parallel under a memory budget. A subset of size
//! `k` is the union of independent per-block samples of size `≈ k / N_P`.
//!
//! Randomness never flows through shared generators: each block draws from
//! a stream derived from `(master seed, block id, purpose)`, so results do
//! not depend on how blocks are scheduled.

mod artifact;
mod build;

pub use artifact::{read_subset, union_sample, write_subset, BlockOrdering, OrderingArtifact};
pub use build::{build_orderings, BuildOptions, DEFAULT_WORKERS};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Target block size when the partition count is not given.
pub const DEFAULT_BLOCK_SIZE: usize = 4096;

/// `ceil(n / 4096)`, the partition count that keeps blocks at or under the default size.
pub fn default_partitions(n: usize) -> usize {
    n.div_ceil(DEFAULT_BLOCK_SIZE).max(1)
}

/// Derives an independent 64-bit seed for one `(stream, purpose)` pair.
pub fn derive_seed(master: u64, stream: u64, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"subsel-seed\0");
    h.update(master.to_le_bytes());
    h.update(stream.to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// A random split of `0..n` into contiguous chunks of a shuffled permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    n: usize,
    seed: u64,
    blocks: Vec<Vec<usize>>,
    /// Global index → (block, position within block).
    locate: Vec<(u32, u32)>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct PlanHeader {
    pub n: usize,
    #[serde(rename = "N_P")]
    pub partitions: usize,
    pub seed: u64,
}

impl PartitionPlan {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Global indices of block `b`, in block-local order.
    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn max_block_size(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `(block, local index)` of a global index.
    pub fn locate(&self, global: usize) -> Option<(usize, usize)> {
        self.locate.get(global).map(|&(b, l)| (b as usize, l as usize))
    }

    pub(crate) fn header(&self) -> PlanHeader {
        PlanHeader {
            n: self.n,
            partitions: self.blocks.len(),
            seed: self.seed,
        }
    }
}

/// Shuffles `0..n` and cuts it into `partitions` blocks; the first
/// `n mod partitions` blocks hold one extra element.
pub fn make_partition(n: usize, partitions: usize, seed: u64) -> Result<PartitionPlan> {
    if partitions == 0 || partitions > n {
        return Err(Error::invalid(format!(
            "partition count must be in 1..={n}, got {partitions}"
        )));
    }
    if n > u32::MAX as usize {
        return Err(Error::invalid("corpus too large for partition bookkeeping"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, "partition")));

    let base = n / partitions;
    let extra = n % partitions;
    let mut blocks = Vec::with_capacity(partitions);
    let mut locate = vec![(0u32, 0u32); n];
    let mut rest = perm.as_slice();
    for b in 0..partitions {
        let size = base + usize::from(b < extra);
        let (chunk, tail) = rest.split_at(size);
        for (l, &g) in chunk.iter().enumerate() {
            locate[g] = (b as u32, l as u32);
        }
        blocks.push(chunk.to_vec());
        rest = tail;
    }
    Ok(PartitionPlan {
        n,
        seed,
        blocks,
        locate,
    })
}

/// Per-block sample sizes for a total budget `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BudgetSplit {
    pub total: usize,
    pub per_block: Vec<usize>,
}

/// `floor(k / N_P)` per block, with the remainder going one each to the
/// first blocks. Budgets above a block's size spill into later blocks.
pub fn split_budget(k: usize, plan: &PartitionPlan) -> Result<BudgetSplit> {
    let np = plan.num_blocks();
    if k < np || k > plan.n() {
        return Err(Error::invalid(format!(
            "subset size must be in {np}..={}, got {k}",
            plan.n()
        )));
    }
    let sizes = plan.block_sizes();
    let mut per_block: Vec<usize> = (0..np).map(|b| k / np + usize::from(b < k % np)).collect();
    let mut overflow = 0;
    for (kb, &size) in per_block.iter_mut().zip(&sizes) {
        if *kb > size {
            overflow += *kb - size;
            *kb = size;
        }
    }
    for (kb, &size) in per_block.iter_mut().zip(&sizes) {
        if overflow == 0 {
            break;
        }
        let room = (size - *kb).min(overflow);
        *kb += room;
        overflow -= room;
    }
    debug_assert_eq!(overflow, 0);
    Ok(BudgetSplit { total: k, per_block })
}
