use crate::error::{Error, Result};
use crate::kernel::SimilarityKernel;

/// Facility location `f(A) = Σ_i max_{j∈A} K_ij`, evaluated from scratch.
pub fn fl_evaluate(kernel: &SimilarityKernel, set: &[usize]) -> Result<f64> {
    let m = kernel.size();
    if let Some(&bad) = set.iter().find(|&&j| j >= m) {
        return Err(Error::invalid(format!("index {bad} out of range for kernel of size {m}")));
    }
    if set.is_empty() {
        return Ok(0.0);
    }
    Ok((0..m)
        .map(|i| {
            let row = kernel.row(i);
            set.iter().map(|&j| f64::from(row[j])).fold(0.0, f64::max)
        })
        .sum())
}

/// Running facility-location state: the best similarity of every ground
/// point to the selected set.
#[derive(Debug, Clone, PartialEq)]
pub struct FlMemo {
    best: Vec<f64>,
    value: f64,
    selected: Vec<bool>,
    order: Vec<usize>,
}

impl FlMemo {
    pub fn new(m: usize) -> Self {
        FlMemo {
            best: vec![0.0; m],
            value: 0.0,
            selected: vec![false; m],
            order: Vec::new(),
        }
    }

    pub fn for_kernel(kernel: &SimilarityKernel) -> Self {
        Self::new(kernel.size())
    }

    /// `f(selected)`.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn best(&self) -> &[f64] {
        &self.best
    }

    /// Selected indices in insertion order.
    pub fn selected(&self) -> &[usize] {
        &self.order
    }

    pub fn contains(&self, e: usize) -> bool {
        self.selected.get(e).copied().unwrap_or(false)
    }

    fn check(&self, kernel: &SimilarityKernel, e: usize) -> Result<()> {
        if kernel.size() != self.best.len() {
            return Err(Error::invalid(format!(
                "memo of size {} used with kernel of size {}",
                self.best.len(),
                kernel.size()
            )));
        }
        if e >= self.best.len() {
            return Err(Error::invalid(format!("index {e} out of range")));
        }
        if self.selected[e] {
            return Err(Error::invalid(format!("index {e} is already selected")));
        }
        Ok(())
    }

    /// `f(S ∪ {e}) − f(S)`.
    pub fn gain(&self, kernel: &SimilarityKernel, e: usize) -> Result<f64> {
        self.check(kernel, e)?;
        Ok(self.gain_unchecked(kernel, e))
    }

    #[inline]
    pub(crate) fn gain_unchecked(&self, kernel: &SimilarityKernel, e: usize) -> f64 {
        // Column e equals row e.
        kernel
            .row(e)
            .iter()
            .zip(&self.best)
            .map(|(&k, &b)| (f64::from(k) - b).max(0.0))
            .sum()
    }

    /// Adds `e` to the selected set.
    pub fn insert(&mut self, kernel: &SimilarityKernel, e: usize) -> Result<()> {
        self.check(kernel, e)?;
        self.insert_unchecked(kernel, e);
        Ok(())
    }

    pub(crate) fn insert_unchecked(&mut self, kernel: &SimilarityKernel, e: usize) {
        for (b, &k) in self.best.iter_mut().zip(kernel.row(e)) {
            *b = b.max(f64::from(k));
        }
        self.value = self.best.iter().sum();
        self.selected[e] = true;
        self.order.push(e);
    }
}

/// Gain of `e` with respect to the memo.
pub fn fl_gain(memo: &FlMemo, kernel: &SimilarityKernel, e: usize) -> Result<f64> {
    memo.gain(kernel, e)
}

/// Returns the memo after selecting `e`.
pub fn fl_update_memo(mut memo: FlMemo, kernel: &SimilarityKernel, e: usize) -> Result<FlMemo> {
    memo.insert(kernel, e)?;
    Ok(memo)
}
