//! Exact distributions of sample sums over finite discrete populations.
//!
//! Everything starts from a population given as a probability mass function
//! on decimal values. Masses live on an exact integer lattice (a decimal
//! quantum times integer indexes), so repeated convolution — the
//! distribution of a sum of independent draws — is exact in support and
//! floating-point-accurate in mass, with no sampling and no density
//! approximation. On top of that sit exact tail probabilities, their
//! normal-approximation counterparts (for quantifying how wrong the usual
//! z-score is in the tails), and a scoring pipeline that rates observed
//! per-item totals by how extreme they are under the population.
//!
//! Module map:
//!
//! * [`decimal`] — exact decimal scalars used for values and lattice math
//! * [`distribution`] — validated lattice distributions and their moments
//! * [`convolution`] — exact n-fold sums, direct or FFT-accelerated
//! * [`stats`] — tails, normal comparison, approximation safety checks,
//!   frequency tables
//! * [`rarity`] — per-item scoring, quarantine, precision/recall sweeps
//! * [`io`] — CSV formats, aggregation, synthetic data
//! * [`special`] — the error-function kernel behind the normal tails

pub mod convolution;
pub mod decimal;
pub mod distribution;
pub mod io;
pub mod rarity;
pub mod special;
pub mod stats;

pub use decimal::Decimal;
pub use distribution::{Distribution, MomentSummary, NormalizationPolicy};
