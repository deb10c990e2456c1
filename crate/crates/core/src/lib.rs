//! Representative subset selection for large corpora.
//!
//! The pipeline, bottom up:
//!
//! * [`features`]: TF-IDF or pooled embeddings, normalized rows, the binary
//!   matrix file layout.
//! * [`kernel`]: clipped cosine similarity kernels, one block at a time.
//! * [`submodular`]: facility location with memoized gains, and naive, lazy
//!   and stochastic greedy maximizers.
//! * [`sampling`]: Taylor-softmax over greedy gains and weighted sampling
//!   without replacement.
//! * [`partition`]: random equal blocks, parallel per-block orderings under a
//!   memory budget, union sampling.
//! * [`session`]: the warm-start / refresh schedule a trainer polls.
//!
//! The guide in `book/` walks through each layer; its code blocks are
//! compiled and run as doc-tests of this crate.

pub mod digest;
pub mod error;
pub mod features;
pub mod kernel;
pub mod partition;
pub mod sampling;
pub mod session;
pub mod submodular;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

// The book's snippets run as doc-tests, one module per chapter.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/features.md")]
    pub mod features {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    pub mod kernels {}
    #[doc = include_str!("../../../book/src/facility-location.md")]
    pub mod facility_location {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    pub mod sampling {}
    #[doc = include_str!("../../../book/src/partitioning.md")]
    pub mod partitioning {}
    #[doc = include_str!("../../../book/src/sessions.md")]
    pub mod sessions {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
