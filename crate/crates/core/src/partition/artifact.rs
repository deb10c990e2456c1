use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{derive_seed, make_partition, BudgetSplit, PartitionPlan, PlanHeader};
use crate::error::{Error, Result};
use crate::sampling::{sample_seeded, SamplingDistribution};

/// One block's greedy ordering, in global indices, with its distribution.
///
/// `order`, gains and probabilities are aligned: position `p` describes
/// `order[p]`, the `p`-th greedy pick.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOrdering {
    block_id: usize,
    order: Vec<usize>,
    distribution: SamplingDistribution,
}

impl BlockOrdering {
    pub(crate) fn new(block_id: usize, order: Vec<usize>, distribution: SamplingDistribution) -> Self {
        BlockOrdering {
            block_id,
            order,
            distribution,
        }
    }

    pub fn block_id(&self) -> usize {
        self.block_id
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn gains(&self) -> &[f64] {
        self.distribution.gains()
    }

    pub fn probabilities(&self) -> &[f64] {
        self.distribution.probabilities()
    }

    pub fn distribution(&self) -> &SamplingDistribution {
        &self.distribution
    }
}

/// Everything needed to draw subsets without touching features again.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingArtifact {
    fingerprint: String,
    seed: u64,
    plan: PartitionPlan,
    blocks: Vec<BlockOrdering>,
}

#[derive(Serialize, Deserialize)]
struct ArtifactFile {
    config_fingerprint: String,
    seed: u64,
    plan: PlanHeader,
    blocks: Vec<BlockFile>,
}

#[derive(Serialize, Deserialize)]
struct BlockFile {
    block_id: usize,
    global_indices_in_greedy_order: Vec<usize>,
    gains: Vec<f64>,
    probabilities: Vec<f64>,
}

impl OrderingArtifact {
    pub(crate) fn new(fingerprint: String, seed: u64, plan: PartitionPlan, blocks: Vec<BlockOrdering>) -> Self {
        OrderingArtifact {
            fingerprint,
            seed,
            plan,
            blocks,
        }
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn plan(&self) -> &PartitionPlan {
        &self.plan
    }

    pub fn blocks(&self) -> &[BlockOrdering] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.plan.n()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ArtifactFile {
            config_fingerprint: self.fingerprint.clone(),
            seed: self.seed,
            plan: self.plan.header(),
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockFile {
                    block_id: b.block_id,
                    global_indices_in_greedy_order: b.order.clone(),
                    gains: b.gains().to_vec(),
                    probabilities: b.probabilities().to_vec(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses an artifact and checks it against the plan regenerated from
    /// its `(n, N_P, seed)` header.
    pub fn from_json(s: &str) -> Result<Self> {
        let file: ArtifactFile = serde_json::from_str(s)?;
        let plan = make_partition(file.plan.n, file.plan.partitions, file.plan.seed)?;
        if file.blocks.len() != plan.num_blocks() {
            return Err(Error::invalid(format!(
                "artifact lists {} blocks, plan has {}",
                file.blocks.len(),
                plan.num_blocks()
            )));
        }
        let mut blocks = Vec::with_capacity(file.blocks.len());
        for (b, bf) in file.blocks.into_iter().enumerate() {
            if bf.block_id != b {
                return Err(Error::invalid(format!("block {b} is labelled {}", bf.block_id)));
            }
            let mut got = bf.global_indices_in_greedy_order.clone();
            got.sort_unstable();
            let mut want = plan.block(b).to_vec();
            want.sort_unstable();
            if got != want {
                return Err(Error::invalid(format!("block {b} does not match the partition plan")));
            }
            let distribution = SamplingDistribution::from_probabilities(bf.probabilities, bf.gains)
                .map_err(|e| Error::invalid(format!("block {b}: {e}")))?;
            if distribution.len() != bf.global_indices_in_greedy_order.len() {
                return Err(Error::invalid(format!("block {b}: gains and indices are not aligned")));
            }
            blocks.push(BlockOrdering::new(b, bf.global_indices_in_greedy_order, distribution));
        }
        Ok(OrderingArtifact {
            fingerprint: file.config_fingerprint,
            seed: file.seed,
            plan,
            blocks,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Draws each block's budget from its distribution and returns the union,
/// ascending. Block `b` samples with a stream derived from `(seed, b)`.
pub fn union_sample(artifact: &OrderingArtifact, split: &BudgetSplit, seed: u64) -> Result<Vec<usize>> {
    let blocks = artifact.blocks();
    if split.per_block.len() != blocks.len() {
        return Err(Error::invalid(format!(
            "budget split has {} blocks, artifact has {}",
            split.per_block.len(),
            blocks.len()
        )));
    }
    if split.per_block.iter().sum::<usize>() != split.total {
        return Err(Error::invalid("budget split does not add up to its total"));
    }
    let mut out = Vec::with_capacity(split.total);
    for (block, &kb) in blocks.iter().zip(&split.per_block) {
        if kb > block.order.len() {
            return Err(Error::invalid(format!(
                "block {} has {} points, budget asks for {kb}",
                block.block_id,
                block.order.len()
            )));
        }
        if kb == 0 {
            continue;
        }
        let picks = sample_seeded(
            &block.distribution,
            kb,
            derive_seed(seed, block.block_id as u64, "sample"),
        )?;
        out.extend(picks.into_iter().map(|p| block.order[p]));
    }
    out.sort_unstable();
    Ok(out)
}

/// Newline-delimited indices, ascending.
pub fn write_subset(path: &Path, subset: &[usize]) -> Result<()> {
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    let mut w = BufWriter::new(fs::File::create(path)?);
    for i in sorted {
        writeln!(w, "{i}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_subset(path: &Path) -> Result<Vec<usize>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("line {}: not an index: {l:?}", i + 1)))
        })
        .collect()
}
