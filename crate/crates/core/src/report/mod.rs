//! End-to-end evaluation: ingest a session log, compute every metric per
//! product category, and emit reports and plot-data tables.

pub mod emit;
pub mod ingest;
pub mod plot;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bucs::{self, BetaParams, IntervalKind, TrialSummary};
use crate::error::{Error, Result};
use crate::iei::{self, Aggregation, Grouping};
use crate::model::{Dataset, Level, Rejection, Strictness};
use crate::tdc::{self, MIN_POINTS};

pub use emit::{emit_report, ReportFormat};
pub use ingest::{load_sessions, write_sessions_csv, IngestOptions, InputFormat, Loaded};
pub use plot::{emit_plot_data, Figure, PlotSource, WidthExperiment};

/// Options that shape an evaluation. The whole struct is echoed into the
/// report metadata and hashed into the config digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub prior: BetaParams,
    pub mass: f64,
    pub aggregation: Aggregation,
    pub strictness: Strictness,
    pub period_window_secs: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            prior: BetaParams::uniform(),
            mass: bucs::DEFAULT_MASS,
            aggregation: Aggregation::Pooled,
            strictness: Strictness::Strict,
            period_window_secs: ingest::DEFAULT_PERIOD_WINDOW_SECS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unavailable {
    InsufficientPeriods,
    NoTaskOutcomes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleInfo {
    pub lo: i64,
    pub hi: i64,
    pub levels: Vec<Level>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IeiEntry {
    pub bits: f64,
    pub normalized: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdcEntry {
    pub beta0: f64,
    pub beta1: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
    pub r2: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEntry {
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEntry {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub kind: IntervalKind,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucsEntry {
    pub posterior: PosteriorEntry,
    pub interval: IntervalEntry,
    pub mean: f64,
}

/// A metric value, or the machine-readable reason it was not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Metric<T> {
    Available(T),
    Unavailable { unavailable: Unavailable },
}

impl<T> Metric<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Metric::Available(v) => Some(v),
            Metric::Unavailable { .. } => None,
        }
    }

    pub fn reason(&self) -> Option<Unavailable> {
        match self {
            Metric::Available(_) => None,
            Metric::Unavailable { unavailable } => Some(*unavailable),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub name: String,
    pub iei: IeiEntry,
    pub tdc: Metric<TdcEntry>,
    pub bucs: Metric<BucsEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub config: EvalConfig,
    pub config_digest: String,
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rows_rejected: usize,
    pub rejections: Vec<Rejection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AduxReport {
    pub scale: ScaleInfo,
    pub categories: Vec<CategoryReport>,
    pub meta: ReportMeta,
}

impl AduxReport {
    pub fn category(&self, name: &str) -> Option<&CategoryReport> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Copies ingestion counts and rejections into the metadata.
    pub fn record_ingest(&mut self, loaded: &Loaded) {
        self.meta.rows_read = loaded.rows_read;
        self.meta.rows_accepted = loaded.dataset.len();
        self.meta.rows_rejected = loaded.rejections.len();
        self.meta.rejections = loaded.rejections.clone();
    }

    /// The report as serialized: every float rounded to 9 decimals.
    pub fn rounded(&self) -> Self {
        let value = emit::rounded_value(self);
        serde_json::from_value(value).expect("report re-reads its own JSON")
    }
}

/// First 16 hex digits of the SHA-256 of `value`'s compact JSON.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> String {
    let canonical = serde_json::to_string(value).expect("config serializes");
    hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
}

pub fn config_digest(scale: &ScaleInfo, config: &EvalConfig) -> String {
    digest(&(scale, config))
}

/// Runs all three metrics for every category in `dataset`.
///
/// IEI is always present. TDC needs at least five populated periods and
/// BUCS needs at least one recorded task outcome; otherwise the entry is
/// marked unavailable with a reason.
pub fn evaluate(dataset: &Dataset, config: &EvalConfig) -> Result<AduxReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let space = dataset.space();
    let grouped = iei::iei_by_group(dataset, Grouping::PerCategory, config.aggregation)?;

    let mut categories = Vec::with_capacity(grouped.groups.len());
    for (key, entropy) in grouped.groups {
        let name = key.category;

        let series = tdc::series_from_dataset(dataset, &name)?;
        let tdc = if series.len() < MIN_POINTS {
            Metric::Unavailable {
                unavailable: Unavailable::InsufficientPeriods,
            }
        } else {
            let fit = tdc::fit_tdc(&series)?;
            Metric::Available(TdcEntry {
                beta0: fit.beta0,
                beta1: fit.beta1,
                stderr: fit.stderr_beta1,
                ci95: [fit.ci95_beta1.0, fit.ci95_beta1.1],
                r2: fit.r_squared,
                n_points: fit.n_points,
            })
        };

        let (mut done, mut total) = (0u64, 0u64);
        for obs in dataset.for_category(&name) {
            if let Some(c) = obs.task_completed {
                total += 1;
                done += u64::from(c);
            }
        }
        let bucs = if total == 0 {
            Metric::Unavailable {
                unavailable: Unavailable::NoTaskOutcomes,
            }
        } else {
            let r = bucs::bucs(&config.prior, &TrialSummary::new(done, total)?, config.mass)?;
            Metric::Available(BucsEntry {
                posterior: PosteriorEntry {
                    alpha: r.posterior.alpha(),
                    beta: r.posterior.beta(),
                },
                interval: IntervalEntry {
                    lower: r.interval.lower,
                    upper: r.interval.upper,
                    mass: r.interval.mass,
                    kind: r.interval.kind,
                    unique: r.interval.unique,
                },
                mean: r.mean,
            })
        };

        categories.push(CategoryReport {
            name,
            iei: IeiEntry {
                bits: entropy.value,
                normalized: entropy.normalized,
                n: entropy.n_ratings,
            },
            tdc,
            bucs,
        });
    }

    let scale = ScaleInfo {
        lo: space.min_code(),
        hi: space.max_code(),
        levels: space.levels().to_vec(),
    };
    let meta = ReportMeta {
        tool: "adux".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_digest: config_digest(&scale, config),
        config: config.clone(),
        rows_read: dataset.len(),
        rows_accepted: dataset.len(),
        rows_rejected: 0,
        rejections: Vec::new(),
        generated_at: None,
    };
    Ok(AduxReport {
        scale,
        categories,
        meta,
    })
}
