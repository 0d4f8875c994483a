//! Peaks-over-threshold modeling toolkit.
//!
//! The crate covers the full excess-over-threshold workflow:
//!
//! - [`gpd`] — generalized Pareto distribution functions and profile-likelihood
//!   maximum-likelihood fitting of scale and shape for a fixed threshold;
//! - [`gof`] — Anderson–Darling goodness-of-fit testing of fitted tails via the
//!   probability integral transform;
//! - [`select`] — automated threshold selection: ordered per-candidate
//!   goodness-of-fit p-values fed through accumulation tests (ForwardStop,
//!   SeqStep, HingeExp) with false-discovery-rate control;
//! - [`risk`] — Value-at-Risk with delta-method asymptotic confidence intervals;
//! - [`simlab`] — a Monte Carlo harness measuring threshold-recovery accuracy on
//!   composite lognormal/GPD scenarios;
//! - [`data_io`] — claims CSV ingestion, summary statistics, and empirical
//!   distribution utilities;
//! - [`cli`] — the command-line frontend built on the modules above.

pub mod cli;
pub mod data_io;
pub mod error;
pub mod gof;
pub mod gpd;
pub mod normal;
pub mod risk;
pub mod select;
pub mod simlab;

pub use error::{Error, Result};

/// SplitMix64-style mixer for deriving independent substream seeds.
///
/// Used wherever one user-facing seed has to fan out into many statistically
/// unrelated generator seeds (bootstrap replicates, per-candidate streams).
pub(crate) fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
