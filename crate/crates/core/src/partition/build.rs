use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use log::{debug, info};

use super::artifact::{BlockOrdering, OrderingArtifact};
use super::{derive_seed, PartitionPlan};
use crate::digest::{features_digest, sha256_hex};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::kernel::{cosine_kernel_rows, kernel_memory_bytes, KernelOptions, MemoryMeter};
use crate::sampling::taylor_softmax;
use crate::submodular::{full_ordering, DEFAULT_EPSILON};

/// Default cap on blocks processed at once.
pub const DEFAULT_WORKERS: usize = 100;

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub epsilon: f64,
    /// Upper bound on blocks in flight.
    pub workers: usize,
    /// Bytes available for simultaneously live kernels.
    pub memory_budget: u64,
    /// Master seed for the per-block greedy streams.
    pub seed: u64,
    pub meter: Option<Arc<MemoryMeter>>,
}

impl BuildOptions {
    pub fn new(seed: u64) -> Self {
        BuildOptions {
            epsilon: DEFAULT_EPSILON,
            workers: DEFAULT_WORKERS,
            memory_budget: u64::MAX,
            seed,
            meter: None,
        }
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn memory_budget(mut self, bytes: u64) -> Self {
        self.memory_budget = bytes;
        self
    }

    pub fn meter(mut self, meter: Arc<MemoryMeter>) -> Self {
        self.meter = Some(meter);
        self
    }
}

fn fingerprint(features: &FeatureMatrix, plan: &PartitionPlan, opts: &BuildOptions) -> String {
    let canonical = format!(
        "subsel-orderings/v1;features={};n={};d={};partitions={};plan_seed={};seed={};epsilon={:016x};algorithm=stochastic",
        features_digest(features),
        features.n(),
        features.d(),
        plan.num_blocks(),
        plan.seed(),
        opts.seed,
        opts.epsilon.to_bits(),
    );
    sha256_hex(canonical.as_bytes())
}

fn build_block(
    features: &FeatureMatrix,
    plan: &PartitionPlan,
    block: usize,
    opts: &BuildOptions,
    parallel_kernel: bool,
) -> Result<BlockOrdering> {
    let rows = plan.block(block);
    let kopts = KernelOptions {
        memory_budget: opts.memory_budget,
        parallel: parallel_kernel,
        meter: opts.meter.clone(),
    };
    let kernel = cosine_kernel_rows(features, rows, &kopts)?;
    let greedy = full_ordering(&kernel, derive_seed(opts.seed, block as u64, "greedy"), opts.epsilon)?;
    drop(kernel);
    let distribution = taylor_softmax(&greedy.gains)?;
    debug!("block {block}: {} points, f = {:.4}", rows.len(), greedy.value());
    Ok(BlockOrdering::new(
        block,
        greedy.order.iter().map(|&l| rows[l]).collect(),
        distribution,
    ))
}

/// Kernel, full ordering and Taylor-softmax distribution for every block.
///
/// At most `min(workers, N_P)` blocks are in flight. The run is refused up
/// front if that many kernels of the largest block size do not fit in the
/// memory budget. Output does not depend on the worker count.
pub fn build_orderings(
    features: &FeatureMatrix,
    plan: &PartitionPlan,
    opts: &BuildOptions,
) -> Result<OrderingArtifact> {
    if plan.n() != features.n() {
        return Err(Error::invalid(format!(
            "plan covers {} points but features hold {}",
            plan.n(),
            features.n()
        )));
    }
    if !(opts.epsilon > 0.0 && opts.epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must be in (0, 1), got {}", opts.epsilon)));
    }
    if opts.workers == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    let blocks = plan.num_blocks();
    let workers = opts.workers.min(blocks);
    let required = kernel_memory_bytes(plan.max_block_size(), workers);
    if required > opts.memory_budget {
        return Err(Error::Capacity {
            required,
            available: opts.memory_budget,
        });
    }
    info!(
        "building orderings: {blocks} blocks, {workers} workers, {required} kernel bytes"
    );

    let built = if workers == 1 {
        (0..blocks)
            .map(|b| build_block(features, plan, b, opts, true).map_err(|e| (b, e)))
            .collect()
    } else {
        run_pool(workers, blocks, |b| build_block(features, plan, b, opts, false))
    };
    let orderings = built.map_err(|(block, e)| Error::Worker {
        block,
        source: Box::new(e),
    })?;
    Ok(OrderingArtifact::new(
        fingerprint(features, plan, opts),
        opts.seed,
        plan.clone(),
        orderings,
    ))
}

/// Runs `task` for `0..tasks` on `workers` threads, results in task order.
/// After the first failure no new tasks start, and the lowest failed task
/// is reported.
fn run_pool<T, F>(workers: usize, tasks: usize, task: F) -> Result<Vec<T>, (usize, Error)>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let mut slots: Vec<Option<Result<T>>> = (0..tasks).map(|_| None).collect();
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    while !failed.load(Ordering::SeqCst) {
                        let t = next.fetch_add(1, Ordering::SeqCst);
                        if t >= tasks {
                            break;
                        }
                        let r = task(t);
                        if r.is_err() {
                            failed.store(true, Ordering::SeqCst);
                        }
                        done.push((t, r));
                    }
                    done
                })
            })
            .collect();
        for h in handles {
            for (t, r) in h.join().expect("worker panicked") {
                slots[t] = Some(r);
            }
        }
    });
    if let Some(t) = slots.iter().position(|s| matches!(s, Some(Err(_)))) {
        let Some(Err(e)) = slots.swap_remove(t) else { unreachable!() };
        return Err((t, e));
    }
    Ok(slots
        .into_iter()
        .map(|s| match s {
            Some(Ok(v)) => v,
            _ => unreachable!("every task ran when none failed"),
        })
        .collect())
}
