//! Subset schedule for an external training loop.
//!
//! A session counts training steps. For the first `W` steps the trainer uses
//! the whole corpus. At `t = W` the orderings are built once and the first
//! subset is drawn; after that a fresh subset is drawn whenever `t` is a
//! multiple of `R`, always from the same stored distributions.
//!
//! ```
//! use subsel::features::FeatureMatrix;
//! use subsel::session::{Session, SessionConfig, SubsetQuery, SubsetSize};
//!
//! let rows: Vec<[f32; 2]> = (0..12).map(|i| [1.0, i as f32]).collect();
//! let features = FeatureMatrix::from_rows(&rows).unwrap();
//! let mut config = SessionConfig::new(12, 7);
//! config.warm_start_steps = 2;
//! config.refresh_interval = 3;
//! config.subset = SubsetSize::Absolute(6);
//! config.partitions = Some(3);
//!
//! let mut session = Session::new(features, config).unwrap();
//! assert_eq!(session.query_subset(), SubsetQuery::FullCorpus);
//! let resampled = session.advance(12).unwrap();
//! assert_eq!(resampled, vec![2, 3, 6, 9, 12]);
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::digest::features_digest;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::partition::{
    build_orderings, default_partitions, derive_seed, make_partition, read_subset,
    split_budget, union_sample, write_subset, BuildOptions, OrderingArtifact, DEFAULT_WORKERS,
};
use crate::submodular::DEFAULT_EPSILON;

pub const DEFAULT_FRACTION: f64 = 0.25;
pub const DEFAULT_REFRESH_INTERVAL: u64 = 25_000;
pub const DEFAULT_WARM_START_STEPS: u64 = 80_000;

/// Subset budget, either a count or a fraction of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetSize {
    #[serde(rename = "k")]
    Absolute(usize),
    Fraction(f64),
}

impl SubsetSize {
    /// Absolute size for a corpus of `n`; fractions round up.
    pub fn resolve(self, n: usize) -> Result<usize> {
        match self {
            SubsetSize::Absolute(k) => Ok(k),
            SubsetSize::Fraction(f) if f > 0.0 && f <= 1.0 => Ok(((f * n as f64).ceil() as usize).min(n)),
            SubsetSize::Fraction(f) => Err(Error::invalid(format!("subset fraction must be in (0, 1], got {f}"))),
        }
    }
}

fn default_fraction() -> SubsetSize {
    SubsetSize::Fraction(DEFAULT_FRACTION)
}
fn default_refresh() -> u64 {
    DEFAULT_REFRESH_INTERVAL
}
fn default_warm_start() -> u64 {
    DEFAULT_WARM_START_STEPS
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_workers() -> usize {
    DEFAULT_WORKERS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// `T`.
    pub total_steps: u64,
    /// `W`; zero starts selecting immediately.
    #[serde(default = "default_warm_start")]
    pub warm_start_steps: u64,
    /// `R`.
    #[serde(default = "default_refresh")]
    pub refresh_interval: u64,
    #[serde(default = "default_fraction")]
    pub subset: SubsetSize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// `N_P`; defaults to blocks of at most 4096 points.
    #[serde(default)]
    pub partitions: Option<usize>,
    /// `N_PP`.
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub seed: u64,
    #[serde(default)]
    pub memory_budget: Option<u64>,
}

impl SessionConfig {
    /// Defaults for everything but the step count and seed: 25% subsets,
    /// `R = 25000`, `W = 80000`, up to 100 blocks in flight.
    pub fn new(total_steps: u64, seed: u64) -> Self {
        SessionConfig {
            total_steps,
            warm_start_steps: DEFAULT_WARM_START_STEPS,
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
            subset: default_fraction(),
            epsilon: DEFAULT_EPSILON,
            partitions: None,
            workers: DEFAULT_WORKERS,
            seed,
            memory_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.warm_start_steps >= self.total_steps {
            return Err(Error::invalid(format!(
                "warm-start steps ({}) must be below total steps ({})",
                self.warm_start_steps, self.total_steps
            )));
        }
        if self.refresh_interval == 0 || self.refresh_interval > self.total_steps {
            return Err(Error::invalid(format!(
                "refresh interval must be in 1..={}, got {}",
                self.total_steps, self.refresh_interval
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::invalid(format!("epsilon must be in (0, 1), got {}", self.epsilon)));
        }
        if self.workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        if self.partitions == Some(0) {
            return Err(Error::invalid("partition count must be at least 1"));
        }
        if let SubsetSize::Fraction(f) = self.subset {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::invalid(format!("subset fraction must be in (0, 1], got {f}")));
            }
        }
        Ok(())
    }

    /// `(k, N_P)` for a corpus of `n` points.
    pub fn resolve(&self, n: usize) -> Result<(usize, usize)> {
        self.validate()?;
        let partitions = self.partitions.unwrap_or_else(|| default_partitions(n));
        if partitions > n {
            return Err(Error::invalid(format!("{partitions} partitions for {n} points")));
        }
        let k = self.subset.resolve(n)?;
        if k < partitions || k > n {
            return Err(Error::invalid(format!(
                "subset size must be in {partitions}..={n}, got {k}"
            )));
        }
        Ok((k, partitions))
    }

    /// `{W} ∪ {t : W ≤ t ≤ T, t mod R = 0}`, ascending.
    pub fn resample_steps(&self) -> Vec<u64> {
        let (w, r, t) = (self.warm_start_steps, self.refresh_interval, self.total_steps);
        let mut steps = vec![w];
        let mut s = (w / r + 1) * r;
        while s <= t {
            steps.push(s);
            s += r;
        }
        steps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    WarmStart,
    SubsetTraining,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetQuery<'a> {
    /// Still warming up: train on every sample.
    FullCorpus,
    Subset(&'a [usize]),
}

/// A subset drawn during [`Session::advance_with`].
#[derive(Debug, Clone, Copy)]
pub struct Resample<'a> {
    pub step: u64,
    pub subset: &'a [usize],
}

#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    features: FeatureMatrix,
    k: usize,
    partitions: usize,
    step: u64,
    artifact: Option<OrderingArtifact>,
    subset: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: SessionConfig,
    t: u64,
    phase: Phase,
    features_digest: String,
    artifact_path: Option<String>,
    subset_path: Option<String>,
}

impl Session {
    pub fn new(features: FeatureMatrix, config: SessionConfig) -> Result<Self> {
        let (k, partitions) = config.resolve(features.n())?;
        let mut session = Session {
            config,
            features,
            k,
            partitions,
            step: 0,
            artifact: None,
            subset: None,
        };
        if session.config.warm_start_steps == 0 {
            session.build()?;
            session.resample()?;
        }
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn subset_size(&self) -> usize {
        self.k
    }

    pub fn phase(&self) -> Phase {
        if self.step < self.config.warm_start_steps {
            Phase::WarmStart
        } else {
            Phase::SubsetTraining
        }
    }

    pub fn artifact(&self) -> Option<&OrderingArtifact> {
        self.artifact.as_ref()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn query_subset(&self) -> SubsetQuery<'_> {
        match (self.phase(), &self.subset) {
            (Phase::SubsetTraining, Some(s)) => SubsetQuery::Subset(s),
            _ => SubsetQuery::FullCorpus,
        }
    }

    /// Advances `steps` training steps; returns the steps at which a new
    /// subset was drawn.
    pub fn advance(&mut self, steps: u64) -> Result<Vec<u64>> {
        let mut at = Vec::new();
        self.advance_with(steps, |r| {
            at.push(r.step);
            Ok(())
        })?;
        Ok(at)
    }

    /// As [`advance`](Self::advance), calling `on_resample` for every new subset.
    pub fn advance_with<F>(&mut self, steps: u64, mut on_resample: F) -> Result<()>
    where
        F: FnMut(Resample<'_>) -> Result<()>,
    {
        let target = self
            .step
            .checked_add(steps)
            .filter(|&t| t <= self.config.total_steps)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "cannot advance {steps} steps from t={} past T={}",
                    self.step, self.config.total_steps
                ))
            })?;
        let (w, r) = (self.config.warm_start_steps, self.config.refresh_interval);
        while self.step < target {
            // Jump straight to the next event or the target.
            let next_event = if self.step < w {
                w
            } else {
                (self.step / r + 1) * r
            };
            self.step = next_event.min(target);
            if self.step != next_event {
                break;
            }
            if self.artifact.is_none() {
                self.build()?;
            }
            self.resample()?;
            on_resample(Resample {
                step: self.step,
                subset: self.subset.as_deref().expect("just resampled"),
            })?;
        }
        Ok(())
    }

    /// Swaps in recomputed features of the same shape. With `rebuild`, an
    /// existing artifact is rebuilt from them; the current subset is kept
    /// until the next refresh.
    pub fn refresh_features(&mut self, features: FeatureMatrix, rebuild: bool) -> Result<()> {
        if features.n() != self.features.n() || features.d() != self.features.d() {
            return Err(Error::invalid(format!(
                "refreshed features are {}x{}, session expects {}x{}",
                features.n(),
                features.d(),
                self.features.n(),
                self.features.d()
            )));
        }
        self.features = features;
        if rebuild && self.artifact.is_some() {
            self.build()?;
        }
        Ok(())
    }

    fn build(&mut self) -> Result<()> {
        info!("t={}: building orderings over {} points", self.step, self.features.n());
        let plan = make_partition(self.features.n(), self.partitions, self.config.seed)?;
        let mut opts = BuildOptions::new(self.config.seed)
            .epsilon(self.config.epsilon)
            .workers(self.config.workers);
        if let Some(budget) = self.config.memory_budget {
            opts = opts.memory_budget(budget);
        }
        self.artifact = Some(build_orderings(&self.features, &plan, &opts)?);
        Ok(())
    }

    fn resample(&mut self) -> Result<()> {
        let artifact = self.artifact.as_ref().expect("orderings built before sampling");
        let split = split_budget(self.k, artifact.plan())?;
        let seed = derive_seed(self.config.seed, self.step, "subset");
        self.subset = Some(union_sample(artifact, &split, seed)?);
        Ok(())
    }

    /// Writes the checkpoint JSON at `path`, with the artifact and current
    /// subset next to it as `<stem>.artifact.json` and `<stem>.subset.txt`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().unwrap_or(Path::new("."));
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::invalid(format!("bad checkpoint path {}", path.display())))?;
        let artifact_path = match &self.artifact {
            Some(a) => {
                let name = format!("{stem}.artifact.json");
                a.save(&dir.join(&name))?;
                Some(name)
            }
            None => None,
        };
        let subset_path = match &self.subset {
            Some(s) => {
                let name = format!("{stem}.subset.txt");
                write_subset(&dir.join(&name), s)?;
                Some(name)
            }
            None => None,
        };
        let ckpt = Checkpoint {
            config: self.config.clone(),
            t: self.step,
            phase: self.phase(),
            features_digest: features_digest(&self.features),
            artifact_path,
            subset_path,
        };
        let mut json = serde_json::to_string_pretty(&ckpt)?;
        json.push('\n');
        fs::write(path, json)?;
        Ok(())
    }

    /// Restores a session saved with [`save`](Self::save). `features` must be
    /// the matrix the session held when it was saved.
    pub fn load(path: &Path, features: FeatureMatrix) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |name: &str| -> PathBuf {
            let p = Path::new(name);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                dir.join(p)
            }
        };
        if features_digest(&features) != ckpt.features_digest {
            return Err(Error::invalid("features do not match the checkpoint"));
        }
        let (k, partitions) = ckpt.config.resolve(features.n())?;
        if ckpt.t > ckpt.config.total_steps {
            return Err(Error::invalid("checkpoint step is past total steps"));
        }
        let artifact = ckpt
            .artifact_path
            .as_deref()
            .map(|p| OrderingArtifact::load(&resolve(p)))
            .transpose()?;
        let subset = ckpt
            .subset_path
            .as_deref()
            .map(|p| read_subset(&resolve(p)))
            .transpose()?;
        let session = Session {
            config: ckpt.config,
            features,
            k,
            partitions,
            step: ckpt.t,
            artifact,
            subset,
        };
        if session.phase() != ckpt.phase {
            return Err(Error::invalid("checkpoint phase disagrees with its step"));
        }
        if session.phase() == Phase::SubsetTraining && (session.artifact.is_none() || session.subset.is_none()) {
            return Err(Error::invalid("checkpoint past warm-start lacks an artifact or subset"));
        }
        Ok(session)
    }
}
