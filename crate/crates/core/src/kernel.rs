//! Dense per-block cosine similarity kernels.
//!
//! A kernel over `m` rows costs `4·m²` bytes, so kernels are only ever built
//! for one partition block at a time. [`kernel_memory_bytes`] is the figure
//! used for admission control, and [`MemoryMeter`] records what was actually
//! live.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{l2_norm, FeatureMatrix};

/// Bytes needed to hold `workers` concurrent `m × m` 32-bit kernels.
pub fn kernel_memory_bytes(m: usize, workers: usize) -> u64 {
    (workers as u64)
        .saturating_mul(m as u64)
        .saturating_mul(m as u64)
        .saturating_mul(4)
}

/// Tracks live kernel bytes across concurrent builds.
#[derive(Debug, Default)]
pub struct MemoryMeter {
    current: AtomicU64,
    peak: AtomicU64,
}

impl MemoryMeter {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn current(&self) -> u64 {
        self.current.load(Ordering::SeqCst)
    }

    /// Highest simultaneous kernel footprint seen so far.
    pub fn peak(&self) -> u64 {
        self.peak.load(Ordering::SeqCst)
    }

    fn acquire(self: &Arc<Self>, bytes: u64) -> MeterGuard {
        let now = self.current.fetch_add(bytes, Ordering::SeqCst) + bytes;
        self.peak.fetch_max(now, Ordering::SeqCst);
        MeterGuard {
            meter: Arc::clone(self),
            bytes,
        }
    }
}

#[derive(Debug)]
struct MeterGuard {
    meter: Arc<MemoryMeter>,
    bytes: u64,
}

impl Drop for MeterGuard {
    fn drop(&mut self) {
        self.meter.current.fetch_sub(self.bytes, Ordering::SeqCst);
    }
}

#[derive(Debug, Clone)]
pub struct KernelOptions {
    /// Refuse to build a kernel larger than this many bytes.
    pub memory_budget: u64,
    /// Split row computation across the current rayon pool.
    pub parallel: bool,
    pub meter: Option<Arc<MemoryMeter>>,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            memory_budget: u64::MAX,
            parallel: true,
            meter: None,
        }
    }
}

/// Symmetric `m × m` similarity matrix with entries in `[0, 1]`.
#[derive(Debug)]
pub struct SimilarityKernel {
    m: usize,
    values: Vec<f32>,
    zero_rows: Vec<usize>,
    _guard: Option<MeterGuard>,
}

impl PartialEq for SimilarityKernel {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.values == other.values
    }
}

impl SimilarityKernel {
    /// Wraps an explicit matrix. Entries must be finite, in `[0, 1]` and
    /// exactly symmetric.
    pub fn from_dense(m: usize, values: Vec<f32>) -> Result<Self> {
        if m == 0 || values.len() != m * m {
            return Err(Error::invalid(format!(
                "kernel of size {m} needs {} values, got {}",
                m * m,
                values.len()
            )));
        }
        for i in 0..m {
            for j in 0..m {
                let v = values[i * m + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("kernel entry ({i},{j}) = {v} outside [0,1]")));
                }
                if v != values[j * m + i] {
                    return Err(Error::invalid(format!("kernel not symmetric at ({i},{j})")));
                }
            }
        }
        let zero_rows = (0..m).filter(|&i| values[i * m + i] == 0.0).collect();
        Ok(SimilarityKernel {
            m,
            values,
            zero_rows,
            _guard: None,
        })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn is_clipped(&self) -> bool {
        true
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.m + j]
    }

    /// Row `i`, which by symmetry is also column `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Rows that came from zero feature vectors. Their diagonal is 0.
    pub fn zero_rows(&self) -> &[usize] {
        &self.zero_rows
    }

    pub fn bytes(&self) -> u64 {
        kernel_memory_bytes(self.m, 1)
    }
}

/// Cosine kernel over every row of `block`.
pub fn cosine_kernel(block: &FeatureMatrix) -> Result<SimilarityKernel> {
    let rows: Vec<usize> = (0..block.n()).collect();
    cosine_kernel_rows(block, &rows, &KernelOptions::default())
}

/// Cosine kernel over the given rows of `features`, in the given order.
///
/// `K_ij = clamp(⟨x_i, x_j⟩ / (‖x_i‖‖x_j‖), 0, 1)`, with the diagonal pinned
/// to exactly 1 (or 0 for zero rows). Only the upper triangle is computed;
/// the lower one is a copy.
pub fn cosine_kernel_rows(
    features: &FeatureMatrix,
    rows: &[usize],
    opts: &KernelOptions,
) -> Result<SimilarityKernel> {
    let m = rows.len();
    if m == 0 {
        return Err(Error::invalid("kernel over zero rows"));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= features.n()) {
        return Err(Error::invalid(format!("row {bad} out of range for n={}", features.n())));
    }
    let required = kernel_memory_bytes(m, 1);
    if required > opts.memory_budget {
        return Err(Error::Capacity {
            required,
            available: opts.memory_budget,
        });
    }
    let d = features.d();

    // Gather the block into f64, scaled to unit length.
    let mut block = vec![0f64; m * d];
    let mut zero_rows = Vec::new();
    for (local, &r) in rows.iter().enumerate() {
        let src = features.row(r);
        let norm = if features.is_normalized() { 1.0 } else { l2_norm(src) };
        let live = src.iter().any(|&v| v != 0.0);
        if !live {
            zero_rows.push(local);
            continue;
        }
        let dst = &mut block[local * d..(local + 1) * d];
        for (o, &v) in dst.iter_mut().zip(src) {
            *o = f64::from(v) / norm;
        }
    }

    let guard = opts.meter.as_ref().map(|meter| meter.acquire(required));
    let mut values = vec![0f32; m * m];
    let fill_row = |i: usize, out: &mut [f32]| {
        let xi = &block[i * d..(i + 1) * d];
        let live = xi.iter().any(|&v| v != 0.0);
        out[i] = if live { 1.0 } else { 0.0 };
        if !live {
            return;
        }
        for j in i + 1..m {
            let xj = &block[j * d..(j + 1) * d];
            let dot: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
            out[j] = dot.clamp(0.0, 1.0) as f32;
        }
    };
    if opts.parallel {
        values
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(i, out)| fill_row(i, out));
    } else {
        values.chunks_mut(m).enumerate().for_each(|(i, out)| fill_row(i, out));
    }
    for i in 1..m {
        for j in 0..i {
            values[i * m + j] = values[j * m + i];
        }
    }

    Ok(SimilarityKernel {
        m,
        values,
        zero_rows,
        _guard: guard,
    })
}
