//! Shared domain types: the rating scale, rating distributions, logged
//! session observations and the validation pass that turns raw rows into a
//! [`Dataset`].

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`DiscreteDistribution`].
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// One admissible rating: an integer code and its display label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub code: i64,
    pub label: String,
}

/// The ordered, discrete set of admissible rating levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSpace {
    levels: Vec<Level>,
}

impl ResponseSpace {
    pub fn new(levels: Vec<Level>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSpace("at least one level is required".into()));
        }
        if levels.windows(2).any(|w| w[0].code >= w[1].code) {
            return Err(Error::InvalidSpace(
                "level codes must be strictly increasing".into(),
            ));
        }
        let mut seen = HashSet::new();
        for level in &levels {
            if !seen.insert(level.label.as_str()) {
                return Err(Error::InvalidSpace(format!(
                    "duplicate label `{}`",
                    level.label
                )));
            }
        }
        Ok(Self { levels })
    }

    /// Contiguous integer scale `lo..=hi`, labelled by the code itself.
    pub fn scale(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidSpace(format!("empty scale {lo}..{hi}")));
        }
        Self::new(
            (lo..=hi)
                .map(|code| Level {
                    code,
                    label: code.to_string(),
                })
                .collect(),
        )
    }

    /// The shipped default: a 5-point scale coded 1..5.
    pub fn five_point() -> Self {
        Self::scale(1, 5).expect("1..5 is a valid scale")
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn codes(&self) -> impl Iterator<Item = i64> + '_ {
        self.levels.iter().map(|l| l.code)
    }

    pub fn index_of(&self, code: i64) -> Option<usize> {
        self.levels.binary_search_by_key(&code, |l| l.code).ok()
    }

    pub fn contains(&self, code: i64) -> bool {
        self.index_of(code).is_some()
    }

    pub fn min_code(&self) -> i64 {
        self.levels[0].code
    }

    pub fn max_code(&self) -> i64 {
        self.levels[self.levels.len() - 1].code
    }
}

impl Default for ResponseSpace {
    fn default() -> Self {
        Self::five_point()
    }
}

/// A probability vector `p(r)` aligned with the levels of a [`ResponseSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    space: ResponseSpace,
    probs: Vec<f64>,
    sample_size: Option<usize>,
}

impl DiscreteDistribution {
    pub fn new(space: ResponseSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} probabilities for {} levels",
                probs.len(),
                space.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} is not a non-negative number"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self {
            space,
            probs,
            sample_size: None,
        })
    }

    pub fn uniform(space: ResponseSpace) -> Self {
        let k = space.len();
        Self {
            probs: vec![1.0 / k as f64; k],
            space,
            sample_size: None,
        }
    }

    /// All mass on the level with the given code.
    pub fn point_mass(space: ResponseSpace, code: i64) -> Result<Self> {
        let idx = space
            .index_of(code)
            .ok_or(Error::UnknownRating { code, line: None })?;
        let mut probs = vec![0.0; space.len()];
        probs[idx] = 1.0;
        Ok(Self {
            space,
            probs,
            sample_size: None,
        })
    }

    /// Relative frequencies from per-level counts.
    pub fn from_counts(space: ResponseSpace, counts: &[u64]) -> Result<Self> {
        if counts.len() != space.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} counts for {} levels",
                counts.len(),
                space.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyInput);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self {
            space,
            probs,
            sample_size: Some(total as usize),
        })
    }

    pub fn space(&self) -> &ResponseSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of ratings the distribution was estimated from, if empirical.
    pub fn sample_size(&self) -> Option<usize> {
        self.sample_size
    }

    pub fn mean_code(&self) -> f64 {
        self.space
            .codes()
            .zip(&self.probs)
            .map(|(c, p)| c as f64 * p)
            .sum()
    }
}

/// Empirical relative-frequency distribution of `ratings` over `space`.
pub fn build_distribution(ratings: &[i64], space: &ResponseSpace) -> Result<DiscreteDistribution> {
    if ratings.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = vec![0u64; space.len()];
    for &code in ratings {
        let idx = space
            .index_of(code)
            .ok_or(Error::UnknownRating { code, line: None })?;
        counts[idx] += 1;
    }
    DiscreteDistribution::from_counts(space.clone(), &counts)
}

/// One logged interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionObservation {
    pub session_id: String,
    pub category: String,
    pub period: u64,
    pub rating: i64,
    pub task_completed: Option<bool>,
}

/// Validated observations sharing one response space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    space: ResponseSpace,
    observations: Vec<SessionObservation>,
}

impl Dataset {
    pub fn new(space: ResponseSpace, observations: Vec<SessionObservation>) -> Result<Self> {
        if let Some(bad) = observations.iter().find(|o| !space.contains(o.rating)) {
            return Err(Error::UnknownRating {
                code: bad.rating,
                line: None,
            });
        }
        Ok(Self {
            space,
            observations,
        })
    }

    pub fn space(&self) -> &ResponseSpace {
        &self.space
    }

    pub fn observations(&self) -> &[SessionObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Distinct categories in lexicographic order.
    pub fn categories(&self) -> Vec<&str> {
        self.observations
            .iter()
            .map(|o| o.category.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn has_category(&self, category: &str) -> bool {
        self.observations.iter().any(|o| o.category == category)
    }

    pub fn for_category<'a>(
        &'a self,
        category: &'a str,
    ) -> impl Iterator<Item = &'a SessionObservation> + 'a {
        self.observations
            .iter()
            .filter(move |o| o.category == category)
    }

    /// Observations bucketed by category, categories in lexicographic order.
    pub fn by_category(&self) -> BTreeMap<&str, Vec<&SessionObservation>> {
        let mut groups: BTreeMap<&str, Vec<&SessionObservation>> = BTreeMap::new();
        for obs in &self.observations {
            groups.entry(obs.category.as_str()).or_default().push(obs);
        }
        groups
    }
}

/// An unvalidated input row. Every field is the raw text from the source;
/// `line` is the 1-based physical line the row came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawRow {
    pub line: usize,
    pub session_id: Option<String>,
    pub category: Option<String>,
    pub period: Option<String>,
    pub rating: Option<String>,
    pub task_completed: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strictness {
    #[default]
    Strict,
    SkipInvalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RejectReason {
    UnknownRating { code: i64 },
    NegativePeriod { period: i64 },
    Malformed { detail: String },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::UnknownRating { code } => write!(f, "unknown rating code {code}"),
            RejectReason::NegativePeriod { period } => write!(f, "negative period {period}"),
            RejectReason::Malformed { detail } => f.write_str(detail),
        }
    }
}

/// A dropped row in skip-invalid mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: RejectReason,
}

impl Rejection {
    pub fn malformed(line: usize, detail: impl Into<String>) -> Self {
        Self {
            line,
            reason: RejectReason::Malformed {
                detail: detail.into(),
            },
        }
    }

    pub fn into_error(self) -> Error {
        let line = Some(self.line);
        match self.reason {
            RejectReason::UnknownRating { code } => Error::UnknownRating { code, line },
            RejectReason::NegativePeriod { period } => Error::NegativePeriod { period, line },
            RejectReason::Malformed { detail } => Error::MalformedRow {
                line: self.line,
                reason: detail,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub dataset: Dataset,
    pub rejections: Vec<Rejection>,
}

fn required<'a>(field: &'a Option<String>, name: &str, line: usize) -> Result<&'a str, Rejection> {
    match field.as_deref().map(str::trim) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(Rejection::malformed(line, format!("missing {name}"))),
    }
}

fn parse_task_flag(raw: Option<&str>, line: usize) -> Result<Option<bool>, Rejection> {
    let Some(text) = raw.map(str::trim).filter(|t| !t.is_empty()) else {
        return Ok(None);
    };
    match text.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(Some(true)),
        "false" | "0" | "no" => Ok(Some(false)),
        _ => Err(Rejection::malformed(
            line,
            format!("task_completed `{text}` is not a boolean"),
        )),
    }
}

fn validate_row(row: &RawRow, space: &ResponseSpace) -> Result<SessionObservation, Rejection> {
    let line = row.line;
    let session_id = required(&row.session_id, "session_id", line)?;
    let category = required(&row.category, "category", line)?;

    let period_text = required(&row.period, "period", line)?;
    let period: i64 = period_text.parse().map_err(|_| {
        Rejection::malformed(line, format!("period `{period_text}` is not an integer"))
    })?;
    if period < 0 {
        return Err(Rejection {
            line,
            reason: RejectReason::NegativePeriod { period },
        });
    }

    let rating_text = required(&row.rating, "rating", line)?;
    let rating: i64 = rating_text.parse().map_err(|_| {
        Rejection::malformed(
            line,
            format!("rating `{rating_text}` is not an integer code"),
        )
    })?;
    if !space.contains(rating) {
        return Err(Rejection {
            line,
            reason: RejectReason::UnknownRating { code: rating },
        });
    }

    let task_completed = parse_task_flag(row.task_completed.as_deref(), line)?;

    Ok(SessionObservation {
        session_id: session_id.to_owned(),
        category: category.to_owned(),
        period: period as u64,
        rating,
        task_completed,
    })
}

/// Checks raw rows against `space`.
///
/// Strict mode stops at the first invalid row. Skip-invalid mode drops every
/// invalid row and records it, with its line number and reason, in
/// [`Validated::rejections`].
pub fn validate_dataset(
    rows: &[RawRow],
    space: &ResponseSpace,
    strictness: Strictness,
) -> Result<Validated> {
    validate_rows(rows.iter().cloned().map(Ok), space, strictness)
}

/// Like [`validate_dataset`], for sources that may already have rejected
/// some rows while tokenizing them. Rows are handled in input order, so in
/// strict mode the earliest problem wins whichever stage found it.
pub fn validate_rows<I>(rows: I, space: &ResponseSpace, strictness: Strictness) -> Result<Validated>
where
    I: IntoIterator<Item = Result<RawRow, Rejection>>,
{
    let mut observations = Vec::new();
    let mut rejections = Vec::new();
    for row in rows {
        match row.and_then(|r| validate_row(&r, space)) {
            Ok(obs) => observations.push(obs),
            Err(rej) => match strictness {
                Strictness::Strict => return Err(rej.into_error()),
                Strictness::SkipInvalid => rejections.push(rej),
            },
        }
    }
    Ok(Validated {
        dataset: Dataset {
            space: space.clone(),
            observations,
        },
        rejections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(line: usize, period: &str, rating: &str) -> RawRow {
        RawRow {
            line,
            session_id: Some(format!("s{line}")),
            category: Some("chat".into()),
            period: Some(period.into()),
            rating: Some(rating.into()),
            task_completed: None,
        }
    }

    #[test]
    fn relative_frequencies() {
        let space = ResponseSpace::five_point();
        let d = build_distribution(&[1, 1, 1, 5], &space).unwrap();
        assert_eq!(d.probs(), &[0.75, 0.0, 0.0, 0.0, 0.25]);
        assert_eq!(d.sample_size(), Some(4));

        let d = build_distribution(&[3, 3, 3], &space).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn empty_and_unknown_ratings() {
        let space = ResponseSpace::five_point();
        assert!(matches!(
            build_distribution(&[], &space),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            build_distribution(&[1, 7], &space),
            Err(Error::UnknownRating { code: 7, .. })
        ));
    }

    #[test]
    fn space_invariants() {
        assert!(ResponseSpace::new(vec![]).is_err());
        let lv = |code: i64, label: &str| Level {
            code,
            label: label.into(),
        };
        assert!(ResponseSpace::new(vec![lv(2, "a"), lv(1, "b")]).is_err());
        assert!(ResponseSpace::new(vec![lv(1, "a"), lv(2, "a")]).is_err());
        let s = ResponseSpace::new(vec![lv(-1, "bad"), lv(0, "meh"), lv(4, "good")]).unwrap();
        assert_eq!(s.index_of(4), Some(2));
        assert_eq!(s.index_of(1), None);
        assert_eq!(ResponseSpace::scale(3, 3).unwrap().len(), 1);
    }

    #[test]
    fn distribution_rejects_bad_vectors() {
        let s = ResponseSpace::scale(1, 3).unwrap();
        assert!(DiscreteDistribution::new(s.clone(), vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(s.clone(), vec![0.5, 0.6, -0.1]).is_err());
        assert!(DiscreteDistribution::new(s.clone(), vec![0.5, 0.2, 0.2]).is_err());
        assert!(DiscreteDistribution::new(s, vec![0.5, 0.25, 0.25]).is_ok());
    }

    #[test]
    fn strict_and_skip_modes() {
        let space = ResponseSpace::five_point();
        let mut rows: Vec<RawRow> = (1..=10).map(|i| raw(i, "0", "3")).collect();
        let ok = validate_dataset(&rows, &space, Strictness::Strict).unwrap();
        assert_eq!(ok.dataset.len(), 10);
        assert!(ok.rejections.is_empty());

        rows[4].rating = Some("9".into());
        let err = validate_dataset(&rows, &space, Strictness::Strict).unwrap_err();
        assert!(matches!(
            err,
            Error::UnknownRating {
                code: 9,
                line: Some(5)
            }
        ));

        let skipped = validate_dataset(&rows, &space, Strictness::SkipInvalid).unwrap();
        assert_eq!(skipped.dataset.len(), 9);
        assert_eq!(
            skipped.rejections,
            vec![Rejection {
                line: 5,
                reason: RejectReason::UnknownRating { code: 9 }
            }]
        );
    }

    #[test]
    fn row_level_errors() {
        let space = ResponseSpace::five_point();
        let check = |row: RawRow| validate_dataset(&[row], &space, Strictness::Strict).unwrap_err();

        assert!(matches!(
            check(raw(3, "-2", "1")),
            Error::NegativePeriod {
                period: -2,
                line: Some(3)
            }
        ));
        assert!(matches!(
            check(raw(4, "x", "1")),
            Error::MalformedRow { line: 4, .. }
        ));
        let mut no_rating = raw(6, "1", "1");
        no_rating.rating = None;
        match check(no_rating) {
            Error::MalformedRow { line, reason } => {
                assert_eq!(line, 6);
                assert!(reason.contains("rating"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut bad_flag = raw(7, "1", "1");
        bad_flag.task_completed = Some("maybe".into());
        assert!(matches!(
            check(bad_flag),
            Error::MalformedRow { line: 7, .. }
        ));
    }

    #[test]
    fn task_flags_parse() {
        let space = ResponseSpace::five_point();
        let mut a = raw(1, "0", "2");
        a.task_completed = Some("TRUE".into());
        let mut b = raw(2, "0", "2");
        b.task_completed = Some("false".into());
        let mut c = raw(3, "0", "2");
        c.task_completed = Some("".into());
        let v = validate_dataset(&[a, b, c], &space, Strictness::Strict).unwrap();
        let flags: Vec<_> = v
            .dataset
            .observations()
            .iter()
            .map(|o| o.task_completed)
            .collect();
        assert_eq!(flags, vec![Some(true), Some(false), None]);
    }

    proptest! {
        #[test]
        fn distribution_is_valid_and_order_free(
            mut ratings in prop::collection::vec(1i64..=7, 1..200),
            seed in any::<u64>(),
        ) {
            let space = ResponseSpace::scale(1, 7).unwrap();
            let d = build_distribution(&ratings, &space).unwrap();
            let total: f64 = d.probs().iter().sum();
            prop_assert!((total - 1.0).abs() <= PROB_SUM_TOLERANCE);
            prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
            prop_assert_eq!(d.probs().len(), space.len());

            // deterministic shuffle
            let n = ratings.len();
            let mut state = seed | 1;
            for i in (1..n).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                ratings.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let shuffled = build_distribution(&ratings, &space).unwrap();
            prop_assert_eq!(d.probs(), shuffled.probs());
        }

        #[test]
        fn skip_matches_strict_on_clean_input(
            cells in prop::collection::vec((0u64..20, 1i64..=5), 0..50)
        ) {
            let space = ResponseSpace::five_point();
            let rows: Vec<RawRow> = cells
                .iter()
                .enumerate()
                .map(|(i, (p, r))| raw(i + 2, &p.to_string(), &r.to_string()))
                .collect();
            let strict = validate_dataset(&rows, &space, Strictness::Strict).unwrap();
            let skip = validate_dataset(&rows, &space, Strictness::SkipInvalid).unwrap();
            prop_assert_eq!(strict, skip);
        }
    }
}
