//! Temporal Drift Coefficient: the ordinary least-squares slope of mean
//! usability on the period index, with Student-t inference on the slope.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::special::student_t_quantile;

/// Fewest longitudinal points a drift fit accepts.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t: u64,
    pub u: f64,
}

/// Longitudinal `(t, U(t))` points with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsabilitySeries {
    points: Vec<SeriesPoint>,
}

impl UsabilitySeries {
    pub fn new(points: Vec<SeriesPoint>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].t >= w[1].t) {
            return Err(Error::InvalidSeries(
                "periods must be strictly increasing".into(),
            ));
        }
        if let Some(p) = points.iter().find(|p| !p.u.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite usability at period {}",
                p.t
            )));
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[(u64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(t, u)| SeriesPoint { t, u }).collect())
    }

    pub fn points(&self) -> &[SeriesPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-period mean rating code for one category. Periods with no ratings
/// are absent; nothing is imputed.
pub fn series_from_dataset(dataset: &Dataset, category: &str) -> Result<UsabilitySeries> {
    let mut sums: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for obs in dataset.for_category(category) {
        let e = sums.entry(obs.period).or_insert((0.0, 0));
        e.0 += obs.rating as f64;
        e.1 += 1;
    }
    if sums.is_empty() {
        return Err(Error::UnknownCategory(category.to_owned()));
    }
    UsabilitySeries::new(
        sums.into_iter()
            .map(|(t, (sum, n))| SeriesPoint {
                t,
                u: sum / n as f64,
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdcFit {
    pub beta0: f64,
    /// The drift coefficient, in rating units per period.
    pub beta1: f64,
    pub stderr_beta1: f64,
    pub ci95_beta1: (f64, f64),
    pub residual_sd: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl TdcFit {
    pub fn fitted(&self, t: f64) -> f64 {
        self.beta0 + self.beta1 * t
    }
}

pub fn fit_tdc(series: &UsabilitySeries) -> Result<TdcFit> {
    let pts = series.points();
    let n = pts.len();
    if n < MIN_POINTS {
        return Err(Error::InsufficientData {
            points: n,
            required: MIN_POINTS,
        });
    }
    let nf = n as f64;
    let t_bar = pts.iter().map(|p| p.t as f64).sum::<f64>() / nf;
    let u_bar = pts.iter().map(|p| p.u).sum::<f64>() / nf;

    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let dt = p.t as f64 - t_bar;
        let du = p.u - u_bar;
        sxx += dt * dt;
        sxy += dt * du;
        syy += du * du;
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateTime);
    }

    let beta1 = sxy / sxx;
    let beta0 = u_bar - beta1 * t_bar;
    let sse: f64 = pts
        .iter()
        .map(|p| {
            let r = p.u - (beta0 + beta1 * p.t as f64);
            r * r
        })
        .sum();

    let df = nf - 2.0;
    let residual_sd = (sse / df).sqrt();
    let stderr_beta1 = residual_sd / sxx.sqrt();
    let half = student_t_quantile(0.975, df) * stderr_beta1;
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };

    Ok(TdcFit {
        beta0,
        beta1,
        stderr_beta1,
        ci95_beta1: (beta1 - half, beta1 + half),
        residual_sd,
        r_squared,
        n_points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Drift {
    Positive,
    Negative,
    Indeterminate,
}

/// Sign of the drift, decided by whether the 95% interval excludes zero.
pub fn classify_drift(fit: &TdcFit) -> Drift {
    let (lo, hi) = fit.ci95_beta1;
    if lo > 0.0 {
        Drift::Positive
    } else if hi < 0.0 {
        Drift::Negative
    } else {
        Drift::Indeterminate
    }
}
