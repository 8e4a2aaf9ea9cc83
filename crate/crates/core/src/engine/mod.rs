//! The stochastic gradient family, its recursive on-the-fly evaluation and
//! the parameter calculator.
//!
//! Iterates follow
//!
//! ```text
//! Y^k       = (1 + β_k) X^k − β_k X^{k−1}
//! X^{k+1}(S) = Π_[0,1](Y^k(S) + α Ĝ^k(Y^k)_S)
//! ```
//!
//! with `X^{-1} = X^0 = 0`. The randomness of iteration `k` (the index set
//! `ℵ^k` and the conditional draws `𝓢^{S,k}`) is a pure function of the
//! master seed, so the full sweep ([`run_algorithm1_explicit`]) and the
//! memoized recursion ([`recursive_r`]) produce bit-identical iterates.

mod config;
mod full_sweep;
mod gradient;
mod memo;
mod params;
mod recursive;
mod sampling;

pub use config::{Momentum, SolverConfig};
pub use full_sweep::{run_algorithm1_explicit, run_algorithm1_explicit_capped};
pub use gradient::{gradient_from_draws, stochastic_grad_component};
pub use memo::{DrawSet, MemoTable, SolverStats, TracedDraw};
pub use params::{theory_params, theta_default, TheoryParams};
pub use recursive::{decide_pen, recursive_r};
pub use sampling::{conditional_draws, sample_index_set, IndexSample};

/// The extrapolated point `(1 + β) x − β x_prev`.
#[inline]
pub fn extrapolate(beta: f64, cur: f64, prev: f64) -> f64 {
    (1.0 + beta) * cur - beta * prev
}

/// One projected ascent step `Π_[0,1](y + α g)`.
#[inline]
pub fn projected_step(y: f64, alpha: f64, g: f64) -> f64 {
    (y + alpha * g).clamp(0.0, 1.0)
}
