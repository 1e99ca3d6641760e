//! Rarity scoring of observed visitor/compensation totals.
//!
//! Given the per-visitor compensation distribution `g` and per-item records
//! "n visitors paid t in total", each item is scored against the exact
//! distribution of an n-visitor sum: `p_t = P(T ≥ t)` under `g^{*n}`, plus
//! the same tail under the normal approximation `N(nμ, nσ²)` for comparison.
//! The multiplicative indices L and L′ score the per-level visitor counts
//! directly against `g`.
//!
//! Powers of `g` are materialized once per distinct `n` in a [`PowerCache`]
//! (a single serialized build phase sharing one squaring ladder); after the
//! cache is sealed, records are scored in parallel against the read-only
//! powers, preserving input order.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::convolution::{self, ConvError, ConvolutionConfig};
use crate::decimal::Decimal;
use crate::distribution::{Distribution, NormalizationPolicy};
use crate::io::EventRow;
use crate::stats::{self, StatsError};

/// Items with `p_t` below this count as "rare" in [`pr_curve`].
pub const DEFAULT_RARE_CUTOFF: f64 = 0.1;
/// Tail probabilities below this are dropped by [`divergence_report`] as
/// numerical-noise territory.
pub const DEFAULT_DIVERGENCE_FLOOR: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum RarityError {
    #[error("no events")]
    EmptyDataset,
    #[error("compensation {0} does not fit an integer lattice")]
    CompensationOutOfRange(u64),
    #[error("population distribution has zero variance; the normal tail is undefined")]
    NonPositiveVariance,
    #[error("record {0:?} has zero visitors")]
    ZeroVisitors(String),
    #[error("compensation level {0} has zero probability in the population")]
    UnsupportedLevel(i64),
    #[error(transparent)]
    Convolution(#[from] ConvError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One item's observation: `visitors` independent draws from the population
/// summed to `total_compensation`.
#[derive(Debug, Clone, PartialEq)]
pub struct RarityRecord {
    pub item_id: String,
    pub visitors: u64,
    pub total_compensation: f64,
}

/// The scores attached to one record.
///
/// `l_index`/`l_prime_index` need the per-level visitor breakdown, which a
/// plain (n, t) record does not carry; [`score`] leaves them `None` and the
/// caller fills them from [`l_index`]/[`l_prime_index`] when it has
/// [`TagCountVector`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct RarityResult {
    pub item_id: String,
    pub visitors: u64,
    pub total_compensation: f64,
    /// `total_compensation / visitors` — the conventional index the tail
    /// scores are compared against.
    pub avg_spend: f64,
    /// Exact tail `P(T ≥ t)` under `g^{*n}`.
    pub p_t: f64,
    /// The same tail under `N(nμ, nσ²)`.
    pub p_z: f64,
    /// `log₁₀(p_t / p_z)`; `None` when either tail is 0.
    pub log_ratio: Option<f64>,
    pub l_index: Option<f64>,
    pub l_prime_index: Option<f64>,
}

/// How many visitors paid each compensation level, for one item.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagCountVector {
    counts: BTreeMap<i64, u64>,
}

impl TagCountVector {
    pub fn new() -> TagCountVector {
        TagCountVector::default()
    }

    /// Counts one more visitor at `level`.
    pub fn add_visitor(&mut self, level: i64) {
        *self.counts.entry(level).or_insert(0) += 1;
    }

    /// Ascending `(level, visitor count)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts.iter().map(|(&j, &k)| (j, k))
    }

    /// Total visitors counted (Σ k_j).
    pub fn total_visitors(&self) -> u64 {
        self.counts.values().sum()
    }
}

impl FromIterator<(i64, u64)> for TagCountVector {
    fn from_iter<I: IntoIterator<Item = (i64, u64)>>(iter: I) -> TagCountVector {
        TagCountVector {
            counts: iter.into_iter().collect(),
        }
    }
}

/// A record set aside instead of scored: its total is unreachable under
/// `g^{*n}`, signalling a data/model mismatch rather than a rare item.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarantinedRecord {
    pub record: RarityRecord,
    pub reason: String,
}

/// Scored records plus the quarantined ones, both in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    pub results: Vec<RarityResult>,
    pub quarantine: Vec<QuarantinedRecord>,
}

/// Knobs for a scoring run.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreOptions {
    /// Apply the half-quantum continuity correction to the normal tail.
    pub continuity_correction: bool,
    pub convolution: ConvolutionConfig,
}

/// (threshold, precision, recall) of the query `avg_spend > threshold`
/// against the rare set. A side is `None` when its denominator set is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// The empirical per-visitor compensation distribution: every event is one
/// draw.
pub fn build_compensation_dist(events: &[EventRow]) -> Result<Distribution, RarityError> {
    if events.is_empty() {
        return Err(RarityError::EmptyDataset);
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for event in events {
        *counts.entry(event.compensation).or_insert(0) += 1;
    }
    let total = events.len() as f64;
    let pairs: Vec<(Decimal, f64)> = counts
        .iter()
        .map(|(&c, &k)| {
            i64::try_from(c)
                .map(|c| (Decimal::from(c), k as f64 / total))
                .map_err(|_| RarityError::CompensationOutOfRange(c))
        })
        .collect::<Result<_, _>>()?;
    Ok(Distribution::from_pairs(&pairs, NormalizationPolicy::Strict)
        .map_err(ConvError::from)?)
}

/// The n-fold powers of one base distribution, one per distinct `n`.
///
/// Built in a single serialized phase (the powers share a squaring ladder),
/// then read-only — scoring threads only ever call [`PowerCache::get`].
/// Each entry is bit-identical to `convolve_power(base, n)` with the same
/// configuration: same ladder, same fold order.
pub struct PowerCache {
    powers: BTreeMap<u64, Distribution>,
}

impl PowerCache {
    pub fn build(
        base: &Distribution,
        folds: impl IntoIterator<Item = u64>,
        cfg: &ConvolutionConfig,
    ) -> Result<PowerCache, ConvError> {
        let distinct: BTreeSet<u64> = folds.into_iter().collect();
        if distinct.contains(&0) {
            return Err(ConvError::FoldCountZero);
        }
        let Some(&max_n) = distinct.iter().next_back() else {
            return Ok(PowerCache {
                powers: BTreeMap::new(),
            });
        };

        // squares[k] = base^{2^k}, shared by every requested power
        let top_bit = 63 - max_n.leading_zeros() as usize;
        let mut squares = Vec::with_capacity(top_bit + 1);
        squares.push(base.clone());
        for k in 1..=top_bit {
            let prev = &squares[k - 1];
            squares.push(convolution::convolve_with(prev, prev, cfg)?);
        }

        let mut powers = BTreeMap::new();
        for &n in &distinct {
            let mut result: Option<Distribution> = None;
            let mut m = n;
            let mut k = 0;
            while m > 0 {
                if m & 1 == 1 {
                    result = Some(match result {
                        None => squares[k].clone(),
                        Some(r) => convolution::convolve_with(&r, &squares[k], cfg)?,
                    });
                }
                m >>= 1;
                k += 1;
            }
            powers.insert(n, result.expect("n ≥ 1 sets at least one bit"));
        }
        Ok(PowerCache { powers })
    }

    pub fn get(&self, n: u64) -> Option<&Distribution> {
        self.powers.get(&n)
    }
}

/// Scores every record against `g^{*n}` with default options.
pub fn score(g: &Distribution, records: &[RarityRecord]) -> Result<ScoreOutcome, RarityError> {
    score_with(g, records, &ScoreOptions::default())
}

/// [`score`] with explicit options. Records whose total falls outside
/// `[n·min(g), n·max(g)]` land in the quarantine list; they never abort the
/// run and never get a score.
pub fn score_with(
    g: &Distribution,
    records: &[RarityRecord],
    opts: &ScoreOptions,
) -> Result<ScoreOutcome, RarityError> {
    let moments = g.moments();
    if !(moments.variance > 0.0) {
        return Err(RarityError::NonPositiveVariance);
    }
    for record in records {
        if record.visitors == 0 {
            return Err(RarityError::ZeroVisitors(record.item_id.clone()));
        }
    }

    let g_min = g.min_value().to_f64();
    let g_max = g.max_value().to_f64();
    let mut in_range = Vec::with_capacity(records.len());
    let mut quarantine = Vec::new();
    for record in records {
        let lo = record.visitors as f64 * g_min;
        let hi = record.visitors as f64 * g_max;
        if record.total_compensation < lo || record.total_compensation > hi {
            quarantine.push(QuarantinedRecord {
                record: record.clone(),
                reason: format!(
                    "total {} is unreachable by {} visitors (range {lo} to {hi})",
                    record.total_compensation, record.visitors
                ),
            });
        } else {
            in_range.push(record);
        }
    }

    let cache = PowerCache::build(g, in_range.iter().map(|r| r.visitors), &opts.convolution)?;
    let results = in_range
        .par_iter()
        .map(|record| {
            let sum_dist = cache
                .get(record.visitors)
                .expect("cache covers every distinct fold count");
            let n = record.visitors as f64;
            let t = record.total_compensation;
            let p_t = stats::upper_tail(sum_dist, t);
            let step = opts
                .continuity_correction
                .then(|| sum_dist.quantum().to_f64());
            let p_z = stats::normal_upper_tail(n * moments.mean, n * moments.variance, t, step)?;
            Ok(RarityResult {
                item_id: record.item_id.clone(),
                visitors: record.visitors,
                total_compensation: t,
                avg_spend: t / n,
                p_t,
                p_z,
                log_ratio: (p_t > 0.0 && p_z > 0.0).then(|| (p_t / p_z).log10()),
                l_index: None,
                l_prime_index: None,
            })
        })
        .collect::<Result<Vec<_>, RarityError>>()?;

    Ok(ScoreOutcome {
        results,
        quarantine,
    })
}

/// `∏ p_j^{k_j}` over the levels of `v`, in log space: the probability of
/// the exact observed per-level outcome under independence.
pub fn l_index(g: &Distribution, v: &TagCountVector) -> Result<f64, RarityError> {
    let mut log_sum = 0.0;
    for (level, k) in v.iter() {
        if k == 0 {
            continue;
        }
        let p = g.mass_at_value(&Decimal::from(level));
        if p <= 0.0 {
            return Err(RarityError::UnsupportedLevel(level));
        }
        log_sum += k as f64 * p.ln();
    }
    Ok(log_sum.exp())
}

/// `∏ (p_j + p_{j+1} + …)^{k_j}`: like [`l_index`] but each factor is the
/// whole tail from its level up, so outcomes "this level or better" pool.
pub fn l_prime_index(g: &Distribution, v: &TagCountVector) -> Result<f64, RarityError> {
    let mut log_sum = 0.0;
    for (level, k) in v.iter() {
        if k == 0 {
            continue;
        }
        let tail = stats::upper_tail(g, level as f64);
        if tail <= 0.0 {
            return Err(RarityError::UnsupportedLevel(level));
        }
        log_sum += k as f64 * tail.ln();
    }
    Ok(log_sum.exp())
}

/// Precision/recall of the query `avg_spend > a` against the rare set
/// `{p_t < rare_cutoff}`, for each threshold.
pub fn pr_curve(results: &[RarityResult], rare_cutoff: f64, thresholds: &[f64]) -> Vec<PrPoint> {
    let rare_total = results.iter().filter(|r| r.p_t < rare_cutoff).count();
    thresholds
        .iter()
        .map(|&a| {
            let mut queried = 0usize;
            let mut hits = 0usize;
            for r in results {
                if r.avg_spend > a {
                    queried += 1;
                    if r.p_t < rare_cutoff {
                        hits += 1;
                    }
                }
            }
            PrPoint {
                threshold: a,
                precision: (queried > 0).then(|| hits as f64 / queried as f64),
                recall: (rare_total > 0).then(|| hits as f64 / rare_total as f64),
            }
        })
        .collect()
}

/// `(visitors, log₁₀(p_t/p_z))` pairs for plotting how the normal
/// approximation diverges from the exact tail. Results where either tail
/// sits below `floor` are dropped as numerical noise.
pub fn divergence_report(results: &[RarityResult], floor: f64) -> Vec<(u64, f64)> {
    results
        .iter()
        .filter(|r| r.p_t >= floor && r.p_z >= floor)
        .filter_map(|r| r.log_ratio.map(|lr| (r.visitors, lr)))
        .collect()
}
