//! Plot-data tables (headered CSV) behind the three standard figures:
//! IEI per category, usability trajectories with their drift line, and
//! interval width against sample size.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::emit::fmt_num;
use super::{AduxReport, Metric};
use crate::bucs::{self, BetaParams, TrialSummary};
use crate::error::{Error, Result};
use crate::model::Dataset;
use crate::tdc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// IEI per category.
    Fig1,
    /// Usability trajectories and fitted drift lines.
    Fig2,
    /// BUCS and Wald interval widths by sample size.
    Fig3,
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fig1" | "1" => Ok(Self::Fig1),
            "fig2" | "2" => Ok(Self::Fig2),
            "fig3" | "3" => Ok(Self::Fig3),
            other => Err(Error::UnknownFormat(other.to_owned())),
        }
    }
}

/// Interval-width experiment: for each `N`, `n = round(p_hat · N)`
/// completions are fed to both the Bayesian and the Wald interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthExperiment {
    pub p_hat: f64,
    pub sample_sizes: Vec<u64>,
    pub prior: BetaParams,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthRow {
    pub trials: u64,
    pub bucs_hdi_width: f64,
    pub wald_width: f64,
}

impl WidthExperiment {
    pub fn rows(&self) -> Result<Vec<WidthRow>> {
        if self.sample_sizes.is_empty() {
            return Err(Error::MissingInput(
                "fig3 needs at least one sample size".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_hat) {
            return Err(Error::InvalidParameter(format!(
                "p_hat {} outside [0, 1]",
                self.p_hat
            )));
        }
        self.sample_sizes
            .iter()
            .map(|&n_trials| {
                let n = (self.p_hat * n_trials as f64).round() as u64;
                let trials = TrialSummary::new(n, n_trials)?;
                Ok(WidthRow {
                    trials: n_trials,
                    bucs_hdi_width: bucs::bucs(&self.prior, &trials, self.mass)?
                        .interval
                        .width(),
                    wald_width: bucs::wald_ci(&trials, self.mass)?.width(),
                })
            })
            .collect()
    }
}

/// What a figure is built from.
pub enum PlotSource<'a> {
    Report(&'a AduxReport),
    /// Trajectories need the per-period means, which the report omits.
    ReportWithData(&'a AduxReport, &'a Dataset),
    Experiment(&'a WidthExperiment),
}

fn missing(what: &str) -> Error {
    Error::MissingInput(what.to_owned())
}

pub fn emit_plot_data<W: Write>(source: &PlotSource<'_>, figure: Figure, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());

    match figure {
        Figure::Fig1 => {
            let report = match source {
                PlotSource::Report(r) | PlotSource::ReportWithData(r, _) => r,
                PlotSource::Experiment(_) => return Err(missing("fig1 needs an evaluated report")),
            };
            w.write_record(["category", "iei_bits", "iei_normalized"])
                .map_err(io)?;
            for c in &report.categories {
                w.write_record([&c.name, &fmt_num(c.iei.bits), &fmt_num(c.iei.normalized)])
                    .map_err(io)?;
            }
        }
        Figure::Fig2 => {
            let PlotSource::ReportWithData(report, data) = source else {
                return Err(missing("fig2 needs a report and its session data"));
            };
            w.write_record(["category", "t", "u", "fitted_u"])
                .map_err(io)?;
            for c in &report.categories {
                let series = tdc::series_from_dataset(data, &c.name)?;
                for p in series.points() {
                    let fitted = match &c.tdc {
                        Metric::Available(fit) => fmt_num(fit.beta0 + fit.beta1 * p.t as f64),
                        Metric::Unavailable { .. } => String::new(),
                    };
                    w.write_record([&c.name, &p.t.to_string(), &fmt_num(p.u), &fitted])
                        .map_err(io)?;
                }
            }
        }
        Figure::Fig3 => {
            let PlotSource::Experiment(exp) = source else {
                return Err(missing("fig3 needs a width experiment"));
            };
            w.write_record(["N", "bucs_hdi_width", "wald_width"])
                .map_err(io)?;
            for row in exp.rows()? {
                w.write_record([
                    &row.trials.to_string(),
                    &fmt_num(row.bucs_hdi_width),
                    &fmt_num(row.wald_width),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ResponseSpace, SessionObservation};
    use crate::report::{evaluate, EvalConfig};

    fn experiment(p_hat: f64, sizes: &[u64]) -> WidthExperiment {
        WidthExperiment {
            p_hat,
            sample_sizes: sizes.to_vec(),
            prior: BetaParams::uniform(),
            mass: 0.95,
        }
    }

    fn table(source: &PlotSource<'_>, fig: Figure) -> Vec<Vec<String>> {
        let mut buf = Vec::new();
        emit_plot_data(source, fig, &mut buf).unwrap();
        csv::Reader::from_reader(buf.as_slice())
            .records()
            .map(|r| r.unwrap().iter().map(str::to_owned).collect())
            .collect()
    }

    #[test]
    fn fig3_widths() {
        let exp = experiment(0.7, &[10, 50, 200, 1000]);
        let rows = table(&PlotSource::Experiment(&exp), Figure::Fig3);
        let widths: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
        assert!(widths.windows(2).all(|w| w[1] < w[0]), "{widths:?}");

        let edge = experiment(1.0, &[10]);
        let row = &table(&PlotSource::Experiment(&edge), Figure::Fig3)[0];
        assert_eq!(row[2].parse::<f64>().unwrap(), 0.0);
        assert!(row[1].parse::<f64>().unwrap() > 0.0);
    }

    #[test]
    fn fig2_carries_fitted_line() {
        let rows: Vec<SessionObservation> = (0..5u64)
            .map(|t| SessionObservation {
                session_id: format!("s{t}"),
                category: "c".into(),
                period: t,
                rating: 1 + t as i64,
                task_completed: None,
            })
            .collect();
        let ds = Dataset::new(ResponseSpace::five_point(), rows).unwrap();
        let report = evaluate(&ds, &EvalConfig::default()).unwrap();
        let t = table(&PlotSource::ReportWithData(&report, &ds), Figure::Fig2);
        assert_eq!(t.len(), 5);
        for row in t {
            assert_eq!(row[2], row[3]);
        }
        let fig1 = table(&PlotSource::Report(&report), Figure::Fig1);
        assert_eq!(fig1[0][0], "c");
    }

    #[test]
    fn missing_inputs() {
        let exp = experiment(0.5, &[]);
        let mut sink = Vec::new();
        assert!(matches!(
            emit_plot_data(&PlotSource::Experiment(&exp), Figure::Fig3, &mut sink),
            Err(Error::MissingInput(_))
        ));
        assert!(matches!(
            emit_plot_data(&PlotSource::Experiment(&exp), Figure::Fig1, &mut sink),
            Err(Error::MissingInput(_))
        ));
    }
}
