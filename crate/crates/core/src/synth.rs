//! Seeded synthetic sessions with known ground truth.
//!
//! Every generator draws from a ChaCha8 stream seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. Ratings, drift noise and trial
//! outcomes each use their own stream number so that changing one knob does
//! not perturb the others. Gaussian noise uses the Box–Muller transform of
//! two uniforms. Output is stable for a given seed within a build; it is
//! not meant to be bit-compatible with other implementations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bucs::TrialSummary;
use crate::error::{Error, Result};
use crate::model::{Dataset, DiscreteDistribution, ResponseSpace, SessionObservation};
use crate::tdc::{SeriesPoint, UsabilitySeries};

const RATING_STREAM: u64 = 0;
const DRIFT_STREAM: u64 = 1;
const TRIAL_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal draw via Box–Muller.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], keeping ln finite
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Ground truth for one synthetic product category.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub category: String,
    pub true_distribution: DiscreteDistribution,
    /// When set, period `t` ratings are shifted by `true_beta1 · t` levels
    /// (stochastically rounded, clamped to the scale).
    pub drift_ratings: bool,
    pub true_beta0: f64,
    pub true_beta1: f64,
    pub noise_sd: f64,
    pub completion_p: f64,
    pub periods: u64,
    pub sessions_per_period: u64,
    pub ratings_per_session: u64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// A stationary generator with no drift and 1 rating per session.
    pub fn stationary(category: &str, dist: DiscreteDistribution, seed: u64) -> Self {
        Self {
            category: category.to_owned(),
            true_beta0: dist.mean_code(),
            true_distribution: dist,
            drift_ratings: false,
            true_beta1: 0.0,
            noise_sd: 0.0,
            completion_p: 0.5,
            periods: 1,
            sessions_per_period: 1,
            ratings_per_session: 1,
            seed,
        }
    }

    pub fn space(&self) -> &ResponseSpace {
        self.true_distribution.space()
    }

    /// File form of this spec, with every default made explicit.
    pub fn to_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            category: self.category.clone(),
            probs: self.true_distribution.probs().to_vec(),
            drift_ratings: self.drift_ratings,
            beta0: Some(self.true_beta0),
            beta1: self.true_beta1,
            noise_sd: self.noise_sd,
            completion_p: self.completion_p,
            periods: self.periods,
            sessions_per_period: self.sessions_per_period,
            ratings_per_session: self.ratings_per_session,
            seed: Some(self.seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.category.trim().is_empty() {
            return bad("generator category is empty".into());
        }
        if !(0.0..=1.0).contains(&self.completion_p) {
            return bad(format!("completion_p {} outside [0, 1]", self.completion_p));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return bad(format!("noise_sd {} must be non-negative", self.noise_sd));
        }
        if !(self.true_beta0.is_finite() && self.true_beta1.is_finite()) {
            return bad("drift line parameters must be finite".into());
        }
        if self.periods < 1 || self.sessions_per_period < 1 || self.ratings_per_session < 1 {
            return bad("periods, sessions_per_period and ratings_per_session must be ≥ 1".into());
        }
        Ok(())
    }
}

fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u = rng.random::<f64>();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum && p > 0.0 {
            return i;
        }
    }
    // rounding left u above the final cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn level_shift<R: Rng + ?Sized>(rng: &mut R, shift: f64) -> i64 {
    let whole = shift.floor();
    let frac = shift - whole;
    whole as i64 + i64::from(rng.random::<f64>() < frac)
}

fn sessions_for(spec: &GeneratorSpec) -> Result<Vec<SessionObservation>> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, RATING_STREAM);
    let space = spec.space();
    let probs = spec.true_distribution.probs();
    let top = space.len() as i64 - 1;

    let capacity = spec.periods * spec.sessions_per_period * spec.ratings_per_session;
    let mut out = Vec::with_capacity(capacity as usize);
    for t in 0..spec.periods {
        for s in 0..spec.sessions_per_period {
            let session_id = format!("{}-{t}-{s}", spec.category);
            let completed = rng.random::<f64>() < spec.completion_p;
            for _ in 0..spec.ratings_per_session {
                let mut idx = sample_index(&mut rng, probs) as i64;
                if spec.drift_ratings {
                    idx += level_shift(&mut rng, spec.true_beta1 * t as f64);
                }
                let idx = idx.clamp(0, top) as usize;
                out.push(SessionObservation {
                    session_id: session_id.clone(),
                    category: spec.category.clone(),
                    period: t,
                    rating: space.levels()[idx].code,
                    task_completed: Some(completed),
                });
            }
        }
    }
    Ok(out)
}

/// Ratings for `periods × sessions_per_period` sessions drawn from the
/// true distribution. Each session carries one task outcome, a
/// Bernoulli(`completion_p`) draw.
pub fn gen_ratings(spec: &GeneratorSpec) -> Result<Dataset> {
    Dataset::new(spec.space().clone(), sessions_for(spec)?)
}

/// Concatenated sessions from several generators sharing one scale.
pub fn gen_sessions(specs: &[GeneratorSpec]) -> Result<Dataset> {
    let first = specs
        .first()
        .ok_or_else(|| Error::MissingInput("no generator specs".into()))?;
    let space = first.space().clone();
    let mut all = Vec::new();
    for spec in specs {
        if spec.space() != &space {
            return Err(Error::InvalidParameter(format!(
                "generator `{}` uses a different response space",
                spec.category
            )));
        }
        all.extend(sessions_for(spec)?);
    }
    Dataset::new(space, all)
}

/// `u(t) = β0 + β1·t + N(0, noise_sd²)` at `t = 0..periods`, clamped to
/// the scale's code range.
pub fn gen_drift_series(spec: &GeneratorSpec) -> Result<UsabilitySeries> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, DRIFT_STREAM);
    let lo = spec.space().min_code() as f64;
    let hi = spec.space().max_code() as f64;
    let points = (0..spec.periods)
        .map(|t| {
            let mut u = spec.true_beta0 + spec.true_beta1 * t as f64;
            if spec.noise_sd > 0.0 {
                u += spec.noise_sd * standard_normal(&mut rng);
            }
            SeriesPoint {
                t,
                u: u.clamp(lo, hi),
            }
        })
        .collect();
    UsabilitySeries::new(points)
}

/// Binomial(`trials`, `completion_p`) completion count.
pub fn gen_trials(completion_p: f64, trials: u64, seed: u64) -> Result<TrialSummary> {
    if !(0.0..=1.0).contains(&completion_p) {
        return Err(Error::InvalidParameter(format!(
            "completion_p {completion_p} outside [0, 1]"
        )));
    }
    let mut rng = rng_for(seed, TRIAL_STREAM);
    let n = (0..trials)
        .filter(|_| rng.random::<f64>() < completion_p)
        .count() as u64;
    TrialSummary::new(n, trials)
}

/// File form of a [`GeneratorSpec`], as read from a TOML config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub category: String,
    /// Probabilities over the scale levels, lowest code first.
    pub probs: Vec<f64>,
    #[serde(default)]
    pub drift_ratings: bool,
    pub beta0: Option<f64>,
    #[serde(default)]
    pub beta1: f64,
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default = "default_completion_p")]
    pub completion_p: f64,
    #[serde(default = "default_periods")]
    pub periods: u64,
    #[serde(default = "default_sessions")]
    pub sessions_per_period: u64,
    #[serde(default = "default_one")]
    pub ratings_per_session: u64,
    pub seed: Option<u64>,
}

fn default_completion_p() -> f64 {
    0.5
}
fn default_periods() -> u64 {
    8
}
fn default_sessions() -> u64 {
    50
}
fn default_one() -> u64 {
    1
}

impl GeneratorConfig {
    /// Resolves against `space`; `seed` is used when the config has none.
    pub fn into_spec(self, space: &ResponseSpace, seed: u64) -> Result<GeneratorSpec> {
        let dist = DiscreteDistribution::new(space.clone(), self.probs)?;
        let spec = GeneratorSpec {
            category: self.category,
            true_beta0: self.beta0.unwrap_or_else(|| dist.mean_code()),
            true_distribution: dist,
            drift_ratings: self.drift_ratings,
            true_beta1: self.beta1,
            noise_sd: self.noise_sd,
            completion_p: self.completion_p,
            periods: self.periods,
            sessions_per_period: self.sessions_per_period,
            ratings_per_session: self.ratings_per_session,
            seed: self.seed.unwrap_or(seed),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Shipped category presets, on the default 5-point scale.
///
/// The rating distributions only encode an ordering of perceived
/// unpredictability: conversational assistants and generative image tools
/// broad, recommendation and voice moderate, form auto-completion
/// concentrated. The numbers themselves carry no empirical weight.
pub const PRESET_NAMES: [&str; 5] = [
    "conversational-assistant",
    "recommendation-engine",
    "generative-image",
    "voice-assistant",
    "form-autocomplete",
];

pub fn preset(name: &str, seed: u64) -> Result<GeneratorSpec> {
    // (probs, drift per period, noise sd, completion p)
    let (probs, beta1, noise_sd, completion_p): ([f64; 5], f64, f64, f64) = match name {
        "conversational-assistant" => ([0.16, 0.20, 0.24, 0.22, 0.18], -0.06, 0.15, 0.72),
        "recommendation-engine" => ([0.03, 0.07, 0.25, 0.45, 0.20], 0.06, 0.15, 0.80),
        "generative-image" => ([0.18, 0.21, 0.22, 0.21, 0.18], 0.0, 0.15, 0.65),
        "voice-assistant" => ([0.06, 0.12, 0.30, 0.35, 0.17], 0.0, 0.40, 0.70),
        "form-autocomplete" => ([0.01, 0.02, 0.05, 0.22, 0.70], 0.0, 0.15, 0.92),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let dist = DiscreteDistribution::new(ResponseSpace::five_point(), probs.to_vec())?;
    Ok(GeneratorSpec {
        category: name.to_owned(),
        true_beta0: dist.mean_code(),
        true_distribution: dist,
        drift_ratings: beta1 != 0.0,
        true_beta1: beta1,
        noise_sd,
        completion_p,
        periods: 8,
        sessions_per_period: 60,
        ratings_per_session: 1,
        seed,
    })
}

/// All presets, the i-th seeded with `seed + i`.
pub fn all_presets(seed: u64) -> Vec<GeneratorSpec> {
    PRESET_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| preset(name, seed.wrapping_add(i as u64)).expect("known preset"))
        .collect()
}
