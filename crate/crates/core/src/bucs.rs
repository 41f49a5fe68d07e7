//! Bayesian Usability Confidence Score: Beta-Binomial updating of task
//! completion counts and the highest density interval of the posterior.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::special;

/// Default credible mass.
pub const DEFAULT_MASS: f64 = 0.95;

/// Bracket width, in lower-tail probability, at which the HDI search stops.
const HDI_TAIL_TOL: f64 = 1e-12;

/// Shape parameters of a Beta distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Beta shape parameters must be positive, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// The flat Beta(1, 1) prior.
    pub fn uniform() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Interior mode; only defined when both shapes exceed 1.
    pub fn mode(&self) -> Option<f64> {
        (self.alpha > 1.0 && self.beta > 1.0)
            .then(|| (self.alpha - 1.0) / (self.alpha + self.beta - 2.0))
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        special::beta_ln_pdf(self.alpha, self.beta, x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        beta_cdf(self, x)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        beta_quantile(self, p)
    }
}

impl fmt::Display for BetaParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Beta({}, {})", self.alpha, self.beta)
    }
}

/// `n` completions observed in `N` trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialSummary {
    completions: u64,
    trials: u64,
}

impl TrialSummary {
    pub fn new(completions: u64, trials: u64) -> Result<Self> {
        if completions > trials {
            return Err(Error::InvalidParameter(format!(
                "{completions} completions exceed {trials} trials"
            )));
        }
        Ok(Self {
            completions,
            trials,
        })
    }

    pub fn completions(&self) -> u64 {
        self.completions
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn failures(&self) -> u64 {
        self.trials - self.completions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalKind {
    Hdi,
    EqualTailed,
    OneSidedLower,
    OneSidedUpper,
}

impl IntervalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalKind::Hdi => "hdi",
            IntervalKind::EqualTailed => "equal-tailed",
            IntervalKind::OneSidedLower => "one-sided-lower",
            IntervalKind::OneSidedUpper => "one-sided-upper",
        }
    }
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
    pub mass: f64,
    pub kind: IntervalKind,
    /// False when the shortest interval is not unique (flat or U-shaped
    /// densities) and a conventional interval was returned instead.
    pub unique: bool,
}

impl CredibleInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Conjugate update: Beta(α + n, β + N − n).
pub fn posterior(prior: &BetaParams, trials: &TrialSummary) -> BetaParams {
    BetaParams {
        alpha: prior.alpha + trials.completions as f64,
        beta: prior.beta + trials.failures() as f64,
    }
}

/// Regularized incomplete beta `I_x(α, β)`; `x` outside `[0, 1]` saturates.
pub fn beta_cdf(params: &BetaParams, x: f64) -> f64 {
    special::inc_beta(params.alpha, params.beta, x)
}

pub fn beta_quantile(params: &BetaParams, p: f64) -> f64 {
    special::inc_beta_inv(params.alpha, params.beta, p)
}

fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidMass(mass))
    }
}

/// Central interval leaving `(1 − mass)/2` in each tail.
pub fn equal_tailed(params: &BetaParams, mass: f64) -> Result<CredibleInterval> {
    check_mass(mass)?;
    let tail = 0.5 * (1.0 - mass);
    Ok(CredibleInterval {
        lower: params.quantile(tail),
        upper: params.quantile(1.0 - tail),
        mass,
        kind: IntervalKind::EqualTailed,
        unique: true,
    })
}

/// Highest density interval of Beta(α, β) holding `mass`.
///
/// * α > 1 and β > 1: the shortest `[Q(p), Q(p + mass)]`. The width is
///   unimodal in the lower-tail mass `p` and its derivative has the sign of
///   `1/f(upper) − 1/f(lower)`, so the minimum is bracketed by bisection on
///   `ln f(upper) − ln f(lower)`.
/// * α ≤ 1 < β: density decreasing, `[0, Q(mass)]`.
/// * β ≤ 1 < α: density increasing, `[Q(1 − mass), 1]`.
/// * α ≤ 1 and β ≤ 1: no unique HDI; the equal-tailed interval is returned
///   with `unique = false`.
pub fn hdi(params: &BetaParams, mass: f64) -> Result<CredibleInterval> {
    check_mass(mass)?;
    let (a, b) = (params.alpha, params.beta);

    if a <= 1.0 && b <= 1.0 {
        let mut ci = equal_tailed(params, mass)?;
        ci.unique = false;
        return Ok(ci);
    }
    if a <= 1.0 {
        return Ok(CredibleInterval {
            lower: 0.0,
            upper: params.quantile(mass),
            mass,
            kind: IntervalKind::OneSidedLower,
            unique: true,
        });
    }
    if b <= 1.0 {
        return Ok(CredibleInterval {
            lower: params.quantile(1.0 - mass),
            upper: 1.0,
            mass,
            kind: IntervalKind::OneSidedUpper,
            unique: true,
        });
    }

    let mut lo = 0.0;
    let mut hi = 1.0 - mass;
    while hi - lo > HDI_TAIL_TOL {
        let p = 0.5 * (lo + hi);
        let lower = params.quantile(p);
        let upper = params.quantile(p + mass);
        if params.ln_pdf(upper) > params.ln_pdf(lower) {
            // width still shrinking as the window slides right
            lo = p;
        } else {
            hi = p;
        }
    }
    let p = 0.5 * (lo + hi);
    Ok(CredibleInterval {
        lower: params.quantile(p),
        upper: params.quantile(p + mass),
        mass,
        kind: IntervalKind::Hdi,
        unique: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BucsResult {
    pub posterior: BetaParams,
    pub interval: CredibleInterval,
    pub mean: f64,
    pub mode: Option<f64>,
}

pub fn bucs(prior: &BetaParams, trials: &TrialSummary, mass: f64) -> Result<BucsResult> {
    let post = posterior(prior, trials);
    Ok(BucsResult {
        interval: hdi(&post, mass)?,
        mean: post.mean(),
        mode: post.mode(),
        posterior: post,
    })
}

/// Folds historical trial summaries into `initial`.
///
/// Counts are accumulated as integers and applied in one conjugate step, so
/// the result is bit-identical for every ordering or split of the history.
pub fn update_prior(history: &[TrialSummary], initial: &BetaParams) -> BetaParams {
    let pooled = history.iter().fold(
        TrialSummary {
            completions: 0,
            trials: 0,
        },
        |acc, t| TrialSummary {
            completions: acc.completions + t.completions,
            trials: acc.trials + t.trials,
        },
    );
    posterior(initial, &pooled)
}

/// Wald interval `p̂ ± z·sqrt(p̂(1 − p̂)/N)`, clamped to `[0, 1]`.
pub fn wald_ci(trials: &TrialSummary, level: f64) -> Result<CredibleInterval> {
    check_mass(level)?;
    if trials.trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
    let n = trials.trials as f64;
    let p_hat = trials.completions as f64 / n;
    let half = z * (p_hat * (1.0 - p_hat) / n).sqrt();
    Ok(CredibleInterval {
        lower: (p_hat - half).max(0.0),
        upper: (p_hat + half).min(1.0),
        mass: level,
        kind: IntervalKind::EqualTailed,
        unique: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn beta(a: f64, b: f64) -> BetaParams {
        BetaParams::new(a, b).unwrap()
    }

    fn trials(n: u64, total: u64) -> TrialSummary {
        TrialSummary::new(n, total).unwrap()
    }

    fn interval_mass(p: &BetaParams, ci: &CredibleInterval) -> f64 {
        p.cdf(ci.upper) - p.cdf(ci.lower)
    }

    #[test]
    fn posterior_substitution() {
        assert_eq!(posterior(&beta(1.0, 1.0), &trials(7, 10)), beta(8.0, 4.0));
        assert_eq!(posterior(&beta(1.0, 1.0), &trials(0, 0)), beta(1.0, 1.0));
        assert_eq!(posterior(&beta(2.0, 3.0), &trials(5, 8)), beta(7.0, 6.0));
    }

    #[test]
    fn parameter_validation() {
        assert!(BetaParams::new(0.0, 1.0).is_err());
        assert!(BetaParams::new(1.0, -2.0).is_err());
        assert!(BetaParams::new(f64::NAN, 1.0).is_err());
        assert!(TrialSummary::new(11, 10).is_err());
    }

    #[test]
    fn cdf_and_quantile_closed_forms() {
        assert!((beta_cdf(&beta(1.0, 1.0), 0.3) - 0.3).abs() < 1e-12);
        assert!((beta_cdf(&beta(2.0, 1.0), 0.5) - 0.25).abs() < 1e-12);
        assert!((beta_cdf(&beta(2.0, 2.0), 0.5) - 0.5).abs() < 1e-12);
        assert!((beta_quantile(&beta(1.0, 1.0), 0.975) - 0.975).abs() < 1e-10);
        assert!((beta_quantile(&beta(2.0, 1.0), 0.25) - 0.5).abs() < 1e-10);
        assert_eq!(beta_quantile(&beta(3.0, 3.0), 0.0), 0.0);
        assert_eq!(beta_quantile(&beta(3.0, 3.0), 1.0), 1.0);
    }

    #[test]
    fn hdi_boundary_cases() {
        let flat = hdi(&beta(1.0, 1.0), 0.95).unwrap();
        assert_eq!(flat.kind, IntervalKind::EqualTailed);
        assert!(!flat.unique);
        assert!((flat.lower - 0.025).abs() < 1e-10);
        assert!((flat.upper - 0.975).abs() < 1e-10);

        let u_shape = hdi(&beta(0.5, 0.5), 0.9).unwrap();
        assert!(!u_shape.unique);

        let dec = hdi(&beta(1.0, 5.0), 0.95).unwrap();
        assert_eq!(dec.kind, IntervalKind::OneSidedLower);
        assert_eq!(dec.lower, 0.0);
        // CDF = 1 - (1-x)^5
        assert!((dec.upper - (1.0 - 0.05f64.powf(0.2))).abs() < 1e-10);

        let inc = hdi(&beta(11.0, 1.0), 0.95).unwrap();
        assert_eq!(inc.kind, IntervalKind::OneSidedUpper);
        assert_eq!(inc.upper, 1.0);
        // CDF = x^11
        assert!((inc.lower - 0.05f64.powf(1.0 / 11.0)).abs() < 1e-10);
    }

    #[test]
    fn hdi_interior_has_equal_endpoint_densities() {
        for (a, b) in [(8.0, 4.0), (2.0, 2.0), (1.5, 30.0), (300.0, 700.0)] {
            let p = beta(a, b);
            let ci = hdi(&p, 0.95).unwrap();
            assert_eq!(ci.kind, IntervalKind::Hdi);
            assert!((interval_mass(&p, &ci) - 0.95).abs() < 1e-6);
            let fl = p.ln_pdf(ci.lower);
            let fu = p.ln_pdf(ci.upper);
            assert!(
                ((fl - fu).exp() - 1.0).abs() < 1e-4,
                "({a},{b}): {fl} vs {fu}"
            );
        }
    }

    #[test]
    fn symmetric_hdi_matches_equal_tailed() {
        let p = beta(2.0, 2.0);
        let h = hdi(&p, 0.95).unwrap();
        let e = equal_tailed(&p, 0.95).unwrap();
        assert!((h.lower - e.lower).abs() < 1e-6);
        assert!((h.upper - e.upper).abs() < 1e-6);
    }

    #[test]
    fn invalid_mass() {
        for m in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                hdi(&beta(2.0, 2.0), m),
                Err(Error::InvalidMass(_))
            ));
        }
    }

    #[test]
    fn bucs_summaries() {
        let r = bucs(&BetaParams::uniform(), &trials(7, 10), 0.95).unwrap();
        assert_eq!(r.posterior, beta(8.0, 4.0));
        assert!((r.mean - 2.0 / 3.0).abs() < 1e-9);
        assert!((r.mode.unwrap() - 0.7).abs() < 1e-12);

        let all = bucs(&BetaParams::uniform(), &trials(10, 10), 0.95).unwrap();
        assert_eq!(all.posterior, beta(11.0, 1.0));
        assert_eq!(all.interval.kind, IntervalKind::OneSidedUpper);
        assert_eq!(all.interval.upper, 1.0);
        assert!(all.mode.is_none());

        let none = bucs(&BetaParams::uniform(), &trials(0, 0), 0.95).unwrap();
        assert_eq!(none.posterior, BetaParams::uniform());
        assert!((none.interval.lower - 0.025).abs() < 1e-10);
        assert!((none.interval.upper - 0.975).abs() < 1e-10);
    }

    #[test]
    fn sequential_updates() {
        let h = [trials(3, 5), trials(4, 5)];
        assert_eq!(update_prior(&h, &BetaParams::uniform()), beta(8.0, 4.0));
        assert_eq!(update_prior(&[], &beta(2.5, 3.5)), beta(2.5, 3.5));
        let rev = [h[1], h[0]];
        assert_eq!(update_prior(&rev, &BetaParams::uniform()), beta(8.0, 4.0));
    }

    #[test]
    fn wald_reference_values() {
        let full = wald_ci(&trials(10, 10), 0.95).unwrap();
        assert_eq!((full.lower, full.upper), (1.0, 1.0));
        let empty = wald_ci(&trials(0, 10), 0.95).unwrap();
        assert_eq!((empty.lower, empty.upper), (0.0, 0.0));

        // 0.7 ∓ z·sqrt(0.021), z = √2·erfinv(0.95), 30-digit arithmetic
        let w = wald_ci(&trials(7, 10), 0.95).unwrap();
        assert!((w.lower - 0.415_974_234_910_674_6).abs() < 1e-12);
        assert!((w.upper - 0.984_025_765_089_325_4).abs() < 1e-12);

        assert!(matches!(
            wald_ci(&trials(0, 0), 0.95),
            Err(Error::ZeroTrials)
        ));
    }

    #[test]
    fn narrowing_and_edge_dominance() {
        let widths: Vec<f64> = [10u64, 50, 200, 1000]
            .iter()
            .map(|&n| {
                let k = (0.7 * n as f64).round() as u64;
                bucs(&BetaParams::uniform(), &trials(k, n), 0.95)
                    .unwrap()
                    .interval
                    .width()
            })
            .collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");

        for t in [trials(10, 10), trials(0, 10)] {
            assert_eq!(wald_ci(&t, 0.95).unwrap().width(), 0.0);
            assert!(
                bucs(&BetaParams::uniform(), &t, 0.95)
                    .unwrap()
                    .interval
                    .width()
                    > 0.0
            );
        }
    }

    proptest! {
        #[test]
        fn conjugate_split_equals_pooled(
            parts in prop::collection::vec((0u64..30, 0u64..30), 0..8),
            a in 0.1f64..10.0,
            b in 0.1f64..10.0,
        ) {
            let history: Vec<TrialSummary> =
                parts.iter().map(|&(s, f)| trials(s, s + f)).collect();
            let n: u64 = parts.iter().map(|p| p.0).sum();
            let total: u64 = parts.iter().map(|p| p.0 + p.1).sum();
            let prior = beta(a, b);
            prop_assert_eq!(update_prior(&history, &prior), posterior(&prior, &trials(n, total)));
        }

        #[test]
        fn quantile_round_trips(a in 0.5f64..50.0, b in 0.5f64..50.0, x in 0.01f64..0.99) {
            let p = beta(a, b);
            let c = p.cdf(x);
            // far tails: an ulp of the CDF spans more than 1e-8 in x
            prop_assume!(p.ln_pdf(x) > 1e-6f64.ln());
            prop_assert!((p.quantile(c) - x).abs() < 1e-8);
        }

        #[test]
        fn every_interval_holds_its_mass(a in 0.2f64..60.0, b in 0.2f64..60.0, mass in 0.5f64..0.99) {
            let p = beta(a, b);
            let ci = hdi(&p, mass).unwrap();
            prop_assert!(0.0 <= ci.lower && ci.lower <= ci.upper && ci.upper <= 1.0);
            prop_assert!((interval_mass(&p, &ci) - mass).abs() < 1e-6);
            if ci.kind == IntervalKind::Hdi {
                let e = equal_tailed(&p, mass).unwrap();
                prop_assert!(ci.width() <= e.width() + 1e-6);
            }
        }
    }
}
