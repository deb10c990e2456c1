//! Facility location and its greedy maximizers.
//!
//! For a kernel `K` over a block of `m` points, facility location scores a
//! subset `A` by how well it covers every point:
//!
//! ```text
//! f(A) = Σ_i max_{j ∈ A} K_ij,    f(∅) = 0
//! ```
//!
//! With a non-negative kernel `f` is monotone and submodular, so greedy
//! selection is within `1 − 1/e` of the best size-`b` subset. [`FlMemo`]
//! caches `max_{j∈A} K_ij` per point so that a marginal gain costs `O(m)`.
//!
//! All three maximizers break ties toward the lowest index. [`lazy_greedy`]
//! returns exactly what [`naive_greedy`] returns; [`stochastic_greedy`]
//! trades an `ε` of the guarantee for looking at only
//! `(m/b)·ln(1/ε)` candidates per step.

mod greedy;
mod memo;

pub use greedy::{
    full_ordering, lazy_greedy, naive_greedy, stochastic_greedy, stochastic_sample_size, Algorithm,
    GreedyResult, DEFAULT_EPSILON,
};
pub use memo::{fl_evaluate, fl_gain, fl_update_memo, FlMemo};
