//! Finite discrete probability distributions on an exact integer lattice.
//!
//! A [`Distribution`] is a map from lattice index to probability mass plus a
//! positive decimal `quantum`; the real value of a support point is
//! `index × quantum`. Keys are exact integers, so convolution sums collide
//! exactly where they should. The key set may include points whose mass has
//! underflowed to `0.0` — they are genuine lattice points created by an
//! operation and are counted as support (and emitted) like any other.
//!
//! Instances are immutable after construction and every constructor enforces
//! the same invariants: non-empty support, masses finite and ≥ 0, total mass
//! within 1e-9 of one (renormalizing only when it is not — so masses that
//! already sum to one pass through bit-unchanged), and a canonical lattice
//! (the gcd of the stored indexes is 1, so equal value sets always get equal
//! representations).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::decimal::{Decimal, DecimalError};

/// Total mass must stay within this of 1 inside the library.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Looser bound applied to user-supplied data under the strict policy.
pub const STRICT_INPUT_TOLERANCE: f64 = 1e-6;

/// What to do about the total mass of user-provided pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalizationPolicy {
    /// Reject input whose probabilities sum farther than 1e-6 from one.
    #[default]
    Strict,
    /// Divide every probability by the sum.
    Renormalize,
}

#[derive(Debug, Error)]
pub enum DistError {
    #[error("no input pairs")]
    EmptyInput,
    #[error("negative probability {prob} for value {value}")]
    NegativeProbability { value: Decimal, prob: f64 },
    #[error("non-finite probability for value {value}")]
    NonFiniteProbability { value: Decimal },
    #[error("duplicate value {0}")]
    DuplicateCategory(Decimal),
    #[error("probabilities sum to {0}, farther than 1e-6 from 1")]
    NotNormalized(f64),
    #[error("probabilities sum to zero")]
    ZeroTotalMass,
    #[error("scale factor a must be non-zero")]
    ZeroScale,
    #[error("value does not fit the lattice: {0}")]
    LatticeOverflow(String),
    #[error(transparent)]
    Decimal(#[from] DecimalError),
}

/// Deterministic pairwise (tree) summation: bounded rounding error when tiny
/// and huge terms mix, same result on every run.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean, variance and the shape moments of a [`Distribution`].
///
/// For a point mass the variance is zero and the dimensionless moments are
/// not defined — reported as `None`, never as NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

/// An immutable pmf on `index × quantum`.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    quantum: Decimal,
    masses: BTreeMap<i64, f64>,
}

impl Distribution {
    /// Builds a distribution from `(value, probability)` pairs.
    ///
    /// The quantum becomes the greatest common step of the values (1 when
    /// the only value is 0), so e.g. values {0, 200, 1000} land on a
    /// 200-step lattice.
    pub fn from_pairs(
        pairs: &[(Decimal, f64)],
        policy: NormalizationPolicy,
    ) -> Result<Distribution, DistError> {
        if pairs.is_empty() {
            return Err(DistError::EmptyInput);
        }
        let mut seen = std::collections::HashSet::new();
        for &(value, prob) in pairs {
            if !prob.is_finite() {
                return Err(DistError::NonFiniteProbability { value });
            }
            if prob < 0.0 {
                return Err(DistError::NegativeProbability { value, prob });
            }
            if !seen.insert(value) {
                return Err(DistError::DuplicateCategory(value));
            }
        }
        Self::from_value_masses(pairs.iter().copied(), Some(policy))
    }

    /// Core constructor: derives the lattice from exact decimal values.
    /// Callers have already validated the masses.
    pub(crate) fn from_value_masses(
        pairs: impl IntoIterator<Item = (Decimal, f64)>,
        policy: Option<NormalizationPolicy>,
    ) -> Result<Distribution, DistError> {
        let pairs: Vec<(Decimal, f64)> = pairs.into_iter().collect();
        let quantum = pairs
            .iter()
            .map(|(v, _)| *v)
            .filter(|v| !v.is_zero())
            .fold(Decimal::ZERO, |acc, v| acc.gcd(&v));
        let quantum = if quantum.is_zero() {
            Decimal::ONE
        } else {
            quantum
        };
        let mut masses = BTreeMap::new();
        for (value, prob) in pairs {
            let index = quantum
                .div_exact(&value)
                .expect("gcd divides every input value");
            let index = i64::try_from(index)
                .map_err(|_| DistError::LatticeOverflow(value.to_string()))?;
            let previous = masses.insert(index, prob);
            debug_assert!(previous.is_none(), "distinct values may not share a key");
        }
        Self::from_index_masses(quantum, masses, policy)
    }

    /// Constructor on an already-indexed lattice (convolution outputs etc.).
    pub(crate) fn from_index_masses(
        quantum: Decimal,
        mut masses: BTreeMap<i64, f64>,
        policy: Option<NormalizationPolicy>,
    ) -> Result<Distribution, DistError> {
        if masses.is_empty() {
            return Err(DistError::EmptyInput);
        }
        debug_assert!(!quantum.is_zero() && !quantum.is_negative());

        let terms: Vec<f64> = masses.values().copied().collect();
        let total = pairwise_sum(&terms);
        if !total.is_finite() || total <= 0.0 {
            return Err(DistError::ZeroTotalMass);
        }
        if matches!(policy, Some(NormalizationPolicy::Strict))
            && (total - 1.0).abs() > STRICT_INPUT_TOLERANCE
        {
            return Err(DistError::NotNormalized(total));
        }
        // Renormalize only when the invariant actually demands it, so masses
        // that already sum to one survive bit-for-bit (parse∘emit identity).
        if (total - 1.0).abs() > MASS_TOLERANCE {
            for m in masses.values_mut() {
                *m /= total;
            }
        }

        let (quantum, masses) = canonical_lattice(quantum, masses)?;
        let dist = Distribution { quantum, masses };
        debug_assert!((dist.total_mass() - 1.0).abs() <= MASS_TOLERANCE);
        Ok(dist)
    }

    /// Step between adjacent lattice points, in measured units.
    pub fn quantum(&self) -> Decimal {
        self.quantum
    }

    /// Number of support points (lattice keys, zero-mass ones included).
    pub fn support_len(&self) -> usize {
        self.masses.len()
    }

    /// Support in ascending index order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (i64, f64)> + '_ {
        self.masses.iter().map(|(&i, &m)| (i, m))
    }

    pub fn mass_at_index(&self, index: i64) -> f64 {
        self.masses.get(&index).copied().unwrap_or(0.0)
    }

    /// Mass at an exact value; 0 when the value is off the lattice.
    pub fn mass_at_value(&self, value: &Decimal) -> f64 {
        if self.quantum.div_exact(value).is_none() {
            return 0.0;
        }
        let index = self.quantum.div_exact(value).unwrap();
        i64::try_from(index)
            .map(|i| self.mass_at_index(i))
            .unwrap_or(0.0)
    }

    /// Real value of a stored lattice index.
    pub fn value_at(&self, index: i64) -> Decimal {
        self.quantum
            .checked_mul_int(index as i128)
            .expect("stored support values are range-checked at construction")
    }

    pub fn min_index(&self) -> i64 {
        *self.masses.keys().next().expect("support is non-empty")
    }

    pub fn max_index(&self) -> i64 {
        *self.masses.keys().next_back().expect("support is non-empty")
    }

    pub fn min_value(&self) -> Decimal {
        self.value_at(self.min_index())
    }

    pub fn max_value(&self) -> Decimal {
        self.value_at(self.max_index())
    }

    /// Pairwise-summed total mass (1 ± 1e-9 by construction).
    pub fn total_mass(&self) -> f64 {
        let terms: Vec<f64> = self.masses.values().copied().collect();
        pairwise_sum(&terms)
    }

    /// Mean, variance, skewness, excess kurtosis via two pairwise-summed
    /// passes over the support in ascending order.
    pub fn moments(&self) -> MomentSummary {
        let values: Vec<f64> = self.iter().map(|(i, _)| self.value_at(i).to_f64()).collect();
        let probs: Vec<f64> = self.iter().map(|(_, m)| m).collect();

        let terms: Vec<f64> = values.iter().zip(&probs).map(|(v, p)| v * p).collect();
        let mean = pairwise_sum(&terms);

        let mut c2 = Vec::with_capacity(values.len());
        let mut c3 = Vec::with_capacity(values.len());
        let mut c4 = Vec::with_capacity(values.len());
        for (v, p) in values.iter().zip(&probs) {
            let d = v - mean;
            let d2 = d * d;
            c2.push(d2 * p);
            c3.push(d2 * d * p);
            c4.push(d2 * d2 * p);
        }
        let variance = pairwise_sum(&c2);
        let std_dev = variance.sqrt();
        let (skewness, excess_kurtosis) = if variance > 0.0 {
            (
                Some(pairwise_sum(&c3) / (std_dev * std_dev * std_dev)),
                Some(pairwise_sum(&c4) / (variance * variance) - 3.0),
            )
        } else {
            (None, None)
        };
        MomentSummary {
            mean,
            variance,
            std_dev,
            skewness,
            excess_kurtosis,
        }
    }

    /// Distribution of `Y = aX + b` with exact decimal coefficients.
    ///
    /// Values map exactly and the lattice is re-derived from the mapped
    /// values, so the result still satisfies `value = index × quantum`; for
    /// a plain rescale this is the quantum scaled by |a|. Masses pass
    /// through unchanged.
    pub fn linear_transform(&self, a: Decimal, b: Decimal) -> Result<Distribution, DistError> {
        if a.is_zero() {
            return Err(DistError::ZeroScale);
        }
        let mut pairs = Vec::with_capacity(self.support_len());
        for (index, mass) in self.iter() {
            let value = a.checked_mul(&self.value_at(index))?.checked_add(&b)?;
            pairs.push((value, mass));
        }
        Self::from_value_masses(pairs, None)
    }
}

/// Divides out any common factor of the stored indexes so equal value sets
/// always share one representation (a lone point at 0 normalizes to
/// quantum 1).
fn canonical_lattice(
    quantum: Decimal,
    masses: BTreeMap<i64, f64>,
) -> Result<(Decimal, BTreeMap<i64, f64>), DistError> {
    use num_integer::Integer;

    let g = masses
        .keys()
        .fold(0u64, |acc, &i| acc.gcd(&i.unsigned_abs()));
    if g == 0 {
        // only key is 0: a point mass at zero sits on the unit lattice
        return Ok((Decimal::ONE, masses));
    }
    if g == 1 {
        return Ok((quantum, masses));
    }
    let quantum = quantum.checked_mul_int(g as i128)?;
    let masses = masses
        .into_iter()
        .map(|(i, m)| (i / g as i64, m))
        .collect();
    Ok((quantum, masses))
}
