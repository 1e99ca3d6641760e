//! CSV interchange and dataset plumbing.
//!
//! Two file kinds, distinguishable on sight:
//!
//! * **Distribution CSV** — `value,probability` per line, no header, `#`
//!   comments and blank lines ignored, values as decimal literals. Emission
//!   renders probabilities in shortest-round-trip form and values as exact
//!   decimals, so `parse(emit(d)) = d` — identical support, masses, and
//!   quantum, bit for bit.
//! * **Event CSV** — mandatory header `item,visitor,compensation`, one
//!   visit per row.
//!
//! Aggregation groups events into per-item records for scoring; the
//! synthetic generator fabricates event datasets deterministically from a
//! seed, one independent random stream per item.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decimal::Decimal;
use crate::distribution::{DistError, Distribution, NormalizationPolicy};
use crate::rarity::{
    build_compensation_dist, PrPoint, QuarantinedRecord, RarityError, RarityRecord, RarityResult,
    TagCountVector,
};

/// Items with fewer visits than this are excluded from aggregation.
pub const DEFAULT_MIN_VISITORS: u64 = 3;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expected header item,visitor,compensation; found {found:?}")]
    BadHeader { found: String },
    #[error("line {line}: negative compensation {value}")]
    NegativeCompensation { line: usize, value: i64 },
    #[error("{role} distribution must have non-negative integer support, found {value}")]
    InvalidSyntheticSupport { role: &'static str, value: String },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Rarity(#[from] RarityError),
}

/// One visit: `visitor_id` paid `compensation` to `item_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRow {
    pub item_id: String,
    pub visitor_id: String,
    pub compensation: u64,
}

/// Parses the header-less `value,probability` format. Later errors from
/// value validation (duplicates, negative probabilities, bad literals)
/// carry the offending line number.
pub fn parse_distribution_csv(
    text: &str,
    policy: NormalizationPolicy,
) -> Result<Distribution, IoError> {
    let mut pairs: Vec<(Decimal, f64)> = Vec::new();
    let mut first_line_of: HashMap<Decimal, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some((value_text, prob_text)) = body.split_once(',') else {
            return Err(IoError::Parse {
                line,
                message: format!("expected value,probability, found {body:?}"),
            });
        };
        let value: Decimal = value_text.parse().map_err(|e| IoError::Parse {
            line,
            message: format!("bad value: {e}"),
        })?;
        let prob: f64 = prob_text.trim().parse().map_err(|_| IoError::Parse {
            line,
            message: format!("bad probability {:?}", prob_text.trim()),
        })?;
        if !prob.is_finite() {
            return Err(IoError::Parse {
                line,
                message: format!("non-finite probability {prob}"),
            });
        }
        if prob < 0.0 {
            return Err(IoError::Parse {
                line,
                message: format!("negative probability {prob}"),
            });
        }
        if let Some(first) = first_line_of.insert(value, line) {
            return Err(IoError::Parse {
                line,
                message: format!("duplicate value {value} (first at line {first})"),
            });
        }
        pairs.push((value, prob));
    }
    Ok(Distribution::from_pairs(&pairs, policy)?)
}

/// Renders ascending `value,probability` lines, LF-terminated. Values are
/// exact decimals; probabilities use the shortest digits that round-trip,
/// so re-parsing reproduces the distribution exactly.
pub fn emit_distribution_csv(d: &Distribution) -> String {
    let mut out = String::new();
    for (index, mass) in d.iter() {
        writeln!(out, "{},{}", d.value_at(index), mass).expect("writing to a String");
    }
    out
}

/// Parses the `item,visitor,compensation` event format (header mandatory).
pub fn parse_events_csv(text: &str) -> Result<Vec<EventRow>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| IoError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["item", "visitor", "compensation"] {
        return Err(IoError::BadHeader {
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| IoError::Parse {
            line,
            message: e.to_string(),
        })?;
        if record.len() != 3 {
            return Err(IoError::Parse {
                line,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let (item_id, visitor_id, comp_text) = (&record[0], &record[1], record[2].trim());
        if item_id.is_empty() || visitor_id.is_empty() {
            return Err(IoError::Parse {
                line,
                message: "empty item or visitor id".to_string(),
            });
        }
        let compensation = match comp_text.parse::<u64>() {
            Ok(c) => c,
            Err(_) => {
                if let Ok(v) = comp_text.parse::<i64>() {
                    return Err(IoError::NegativeCompensation { line, value: v });
                }
                return Err(IoError::Parse {
                    line,
                    message: format!("bad compensation {comp_text:?}"),
                });
            }
        };
        rows.push(EventRow {
            item_id: item_id.to_string(),
            visitor_id: visitor_id.to_string(),
            compensation,
        });
    }
    Ok(rows)
}

/// Renders events back to the header-ed CSV format.
pub fn write_events_csv(rows: &[EventRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["item", "visitor", "compensation"])
        .expect("writing to memory");
    for row in rows {
        w.write_record([
            row.item_id.as_str(),
            row.visitor_id.as_str(),
            &row.compensation.to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}

/// Events an aggregation dropped for having too few visitors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExclusionSummary {
    pub items: u64,
    pub visits: u64,
    pub total_compensation: u64,
}

/// Everything an event dataset aggregates into: the population distribution
/// over all kept visits, one record and one per-level visitor breakdown per
/// qualifying item (parallel vectors, first-appearance item order), and a
/// summary of what was excluded.
#[derive(Debug, Clone)]
pub struct Aggregation {
    pub compensation_dist: Distribution,
    pub records: Vec<RarityRecord>,
    pub tag_vectors: Vec<TagCountVector>,
    pub excluded: ExclusionSummary,
}

/// Groups events by item. Duplicate (item, visitor) pairs count as separate
/// visits unless `dedupe` is set, in which case only the first is kept —
/// dropped duplicates then contribute to nothing, not even the population
/// distribution.
pub fn aggregate_events(
    rows: &[EventRow],
    min_visitors: u64,
    dedupe: bool,
) -> Result<Aggregation, IoError> {
    if rows.is_empty() {
        return Err(RarityError::EmptyDataset.into());
    }
    let deduped: Vec<EventRow>;
    let kept: &[EventRow] = if dedupe {
        let mut seen = std::collections::HashSet::new();
        deduped = rows
            .iter()
            .filter(|r| seen.insert((r.item_id.clone(), r.visitor_id.clone())))
            .cloned()
            .collect();
        &deduped
    } else {
        rows
    };

    // Validates every compensation fits the integer lattice.
    let compensation_dist = build_compensation_dist(kept)?;

    struct Group {
        visits: u64,
        total: u64,
        levels: TagCountVector,
    }
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Group> = HashMap::new();
    for row in kept {
        let group = groups.entry(&row.item_id).or_insert_with(|| {
            order.push(&row.item_id);
            Group {
                visits: 0,
                total: 0,
                levels: TagCountVector::new(),
            }
        });
        group.visits += 1;
        group.total += row.compensation;
        group
            .levels
            .add_visitor(i64::try_from(row.compensation).expect("validated above"));
    }

    let mut records = Vec::new();
    let mut tag_vectors = Vec::new();
    let mut excluded = ExclusionSummary::default();
    for id in order {
        let group = &groups[id];
        if group.visits >= min_visitors {
            records.push(RarityRecord {
                item_id: id.to_string(),
                visitors: group.visits,
                total_compensation: group.total as f64,
            });
            tag_vectors.push(group.levels.clone());
        } else {
            excluded.items += 1;
            excluded.visits += group.visits;
            excluded.total_compensation += group.total;
        }
    }
    Ok(Aggregation {
        compensation_dist,
        records,
        tag_vectors,
        excluded,
    })
}

/// Recipe for a fabricated event dataset. The seed fully determines the
/// output.
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub num_items: u64,
    /// How many visitors an item attracts (non-negative integer support).
    pub visitor_count_distribution: Distribution,
    /// What one visitor pays (non-negative integer support).
    pub compensation_distribution: Distribution,
    pub random_seed: u64,
}

/// Draws each item's visitor count, then that many independent compensation
/// draws. Every item gets its own counter-derived random stream, so output
/// is reproducible and items are independent.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<EventRow>, IoError> {
    let visitor_levels = integer_levels("visitor count", &config.visitor_count_distribution)?;
    let compensation_levels = integer_levels("compensation", &config.compensation_distribution)?;

    let mut rows = Vec::new();
    for item in 0..config.num_items {
        let mut rng = ChaCha8Rng::seed_from_u64(config.random_seed);
        rng.set_stream(item);
        let item_id = format!("item{item:06}");
        let visitors = draw(&visitor_levels, &mut rng);
        for v in 0..visitors {
            rows.push(EventRow {
                item_id: item_id.clone(),
                visitor_id: format!("v{v:06}"),
                compensation: draw(&compensation_levels, &mut rng),
            });
        }
    }
    Ok(rows)
}

fn integer_levels(
    role: &'static str,
    d: &Distribution,
) -> Result<Vec<(u64, f64)>, IoError> {
    d.iter()
        .map(|(index, mass)| {
            let value = d.value_at(index);
            value
                .to_i128()
                .and_then(|v| u64::try_from(v).ok())
                .map(|v| (v, mass))
                .ok_or(IoError::InvalidSyntheticSupport {
                    role,
                    value: value.to_string(),
                })
        })
        .collect()
}

/// Inverse-CDF draw: first level whose cumulative mass exceeds the uniform.
fn draw(levels: &[(u64, f64)], rng: &mut impl Rng) -> u64 {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for &(value, mass) in levels {
        cum += mass;
        if cum > u {
            return value;
        }
    }
    levels.last().expect("support is non-empty").0
}

fn push_field(out: &mut String, value: Option<f64>) {
    if let Some(v) = value {
        write!(out, "{v}").expect("writing to a String");
    }
}

/// Renders the score report: one row per result, columns
/// `item,n,t,avg_spend,p_t,p_z,log_ratio,l,l_prime`. Optional scores that
/// are not defined render as empty fields.
pub fn write_report_csv(results: &[RarityResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "item",
        "n",
        "t",
        "avg_spend",
        "p_t",
        "p_z",
        "log_ratio",
        "l",
        "l_prime",
    ])
    .expect("writing to memory");
    for r in results {
        let mut log_ratio = String::new();
        push_field(&mut log_ratio, r.log_ratio);
        let mut l = String::new();
        push_field(&mut l, r.l_index);
        let mut l_prime = String::new();
        push_field(&mut l_prime, r.l_prime_index);
        w.write_record([
            r.item_id.as_str(),
            &r.visitors.to_string(),
            &r.total_compensation.to_string(),
            &r.avg_spend.to_string(),
            &r.p_t.to_string(),
            &r.p_z.to_string(),
            &log_ratio,
            &l,
            &l_prime,
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}

/// Renders the quarantine list: `item,n,t,reason` per set-aside record.
pub fn write_quarantine_csv(quarantine: &[QuarantinedRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["item", "n", "t", "reason"])
        .expect("writing to memory");
    for q in quarantine {
        w.write_record([
            q.record.item_id.as_str(),
            &q.record.visitors.to_string(),
            &q.record.total_compensation.to_string(),
            &q.reason,
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}

/// Renders precision/recall sweep points as `a,precision,recall`.
pub fn write_pr_csv(points: &[PrPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["a", "precision", "recall"])
        .expect("writing to memory");
    for p in points {
        let mut precision = String::new();
        push_field(&mut precision, p.precision);
        let mut recall = String::new();
        push_field(&mut recall, p.recall);
        w.write_record([&p.threshold.to_string(), &precision, &recall])
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}

/// Renders divergence rows as `n,log_ratio`.
pub fn write_divergence_csv(rows: &[(u64, f64)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "log_ratio"]).expect("writing to memory");
    for &(n, lr) in rows {
        w.write_record([&n.to_string(), &lr.to_string()])
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("CSV output is UTF-8")
}
