//! Interaction Entropy Index: Shannon entropy, in bits, of the rating
//! distribution.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_distribution, Dataset, DiscreteDistribution, ResponseSpace};

/// An IEI value in bits plus its scale-normalized form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyBits {
    pub value: f64,
    /// `value / log2|R|`, or 0 for a single-level space.
    pub normalized: f64,
    pub n_ratings: usize,
}

/// Largest attainable IEI on `space`.
pub fn max_entropy(space: &ResponseSpace) -> f64 {
    (space.len() as f64).log2()
}

/// `-Σ p log2 p` with `0·log2 0 = 0`.
pub fn shannon_bits(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    // rounding can leave a -0.0 or a hair above the bound
    h.max(0.0)
}

pub fn iei(dist: &DiscreteDistribution) -> EntropyBits {
    let value = shannon_bits(dist.probs()).min(max_entropy(dist.space()));
    EntropyBits {
        value,
        normalized: normalize(value, dist.space()),
        n_ratings: dist.sample_size().unwrap_or(0),
    }
}

pub fn iei_normalized(dist: &DiscreteDistribution) -> f64 {
    normalize(iei(dist).value, dist.space())
}

fn normalize(bits: f64, space: &ResponseSpace) -> f64 {
    if space.len() < 2 {
        0.0
    } else {
        (bits / max_entropy(space)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    #[default]
    PerCategory,
    PerCategoryPerPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// One distribution from every rating in the group.
    #[default]
    Pooled,
    /// IEI per `session_id`, then the arithmetic mean across sessions.
    MeanOfSessions,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub category: String,
    pub period: Option<u64>,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.period {
            Some(p) => write!(f, "{}@{}", self.category, p),
            None => f.write_str(&self.category),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedIei {
    pub groups: Vec<(GroupKey, EntropyBits)>,
    /// Groups in the category × period grid that had no ratings.
    pub omitted: Vec<GroupKey>,
}

/// IEI for each group of `dataset`, groups in (category, period) order.
///
/// With per-period grouping, every period between a category's first and
/// last populated period is a group; empty ones are listed in
/// [`GroupedIei::omitted`] instead of receiving a value.
pub fn iei_by_group(
    dataset: &Dataset,
    grouping: Grouping,
    aggregation: Aggregation,
) -> Result<GroupedIei> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // key -> session -> ratings
    let mut cells: BTreeMap<GroupKey, BTreeMap<&str, Vec<i64>>> = BTreeMap::new();
    for obs in dataset.observations() {
        let key = GroupKey {
            category: obs.category.clone(),
            period: match grouping {
                Grouping::PerCategory => None,
                Grouping::PerCategoryPerPeriod => Some(obs.period),
            },
        };
        cells
            .entry(key)
            .or_default()
            .entry(obs.session_id.as_str())
            .or_default()
            .push(obs.rating);
    }

    let mut omitted = Vec::new();
    if grouping == Grouping::PerCategoryPerPeriod {
        let mut span: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
        for key in cells.keys() {
            let p = key.period.expect("per-period key");
            let e = span.entry(key.category.as_str()).or_insert((p, p));
            e.0 = e.0.min(p);
            e.1 = e.1.max(p);
        }
        for (cat, (lo, hi)) in span {
            for p in lo..=hi {
                let key = GroupKey {
                    category: cat.to_owned(),
                    period: Some(p),
                };
                if !cells.contains_key(&key) {
                    omitted.push(key);
                }
            }
        }
    }

    let space = dataset.space();
    let mut groups = Vec::with_capacity(cells.len());
    for (key, sessions) in cells {
        let entropy = match aggregation {
            Aggregation::Pooled => {
                let all: Vec<i64> = sessions.values().flatten().copied().collect();
                iei(&build_distribution(&all, space)?)
            }
            Aggregation::MeanOfSessions => {
                let mut sum = 0.0;
                let mut n_ratings = 0;
                for ratings in sessions.values() {
                    sum += iei(&build_distribution(ratings, space)?).value;
                    n_ratings += ratings.len();
                }
                let value = (sum / sessions.len() as f64).min(max_entropy(space));
                EntropyBits {
                    value,
                    normalized: normalize(value, space),
                    n_ratings,
                }
            }
        };
        groups.push((key, entropy));
    }
    Ok(GroupedIei { groups, omitted })
}
