//! The `adux` command line.
//!
//! Exit status: 0 on success, 2 on data or validation errors, 64 on usage
//! errors. Results go to stdout or `--out`; diagnostics go to stderr. Output
//! files are written to a temporary sibling and renamed into place, so a
//! failed run never leaves a partial file behind.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bucs::{self, BetaParams, TrialSummary};
use crate::error::{Error, Result};
use crate::iei::{self, Aggregation, Grouping};
use crate::model::{ResponseSpace, Strictness};
use crate::report::emit::fmt_num;
use crate::report::{
    self, emit_plot_data, emit_report, ingest, EvalConfig, Figure, IngestOptions, InputFormat,
    Loaded, PlotSource, ReportFormat, WidthExperiment,
};
use crate::synth::{self, GeneratorConfig, GeneratorSpec};
use crate::tdc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "adux",
    version,
    about = "Entropy, drift and Bayesian confidence metrics for AI interface session logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interaction Entropy Index per group.
    Iei(IeiArgs),
    /// Temporal Drift Coefficient per category.
    Tdc(TdcArgs),
    /// Posterior and credible interval for task completions.
    Bucs(BucsArgs),
    /// Full evaluation of a session log.
    Report(ReportArgs),
    /// Write a synthetic session CSV.
    Simulate(SimulateArgs),
    /// Write plot-data tables.
    Plotdata(PlotArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GroupBy {
    Category,
    CategoryPeriod,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregationArg {
    Pooled,
    MeanOfSessions,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Pooled => Aggregation::Pooled,
            AggregationArg::MeanOfSessions => Aggregation::MeanOfSessions,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmitArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig1,
    Fig2,
    Fig3,
}

fn parse_scale(s: &str) -> std::result::Result<(i64, i64), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected lo..hi, got `{s}`"))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad scale bound `{lo}`"))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad scale bound `{hi}`"))?;
    if lo >= hi {
        return Err(format!("scale needs lo < hi, got {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_prior(s: &str) -> std::result::Result<BetaParams, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected alpha,beta, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad alpha `{a}`"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad beta `{b}`"))?;
    BetaParams::new(a, b).map_err(|e| e.to_string())
}

fn parse_mass(s: &str) -> std::result::Result<f64, String> {
    let m: f64 = s.parse().map_err(|_| format!("bad mass `{s}`"))?;
    if m > 0.0 && m < 1.0 {
        Ok(m)
    } else {
        Err(format!("mass must lie strictly between 0 and 1, got {m}"))
    }
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("bad fraction `{s}`"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("expected a value in [0, 1], got {p}"))
    }
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Session log path, or `-` for stdin.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Rating scale as `lo..hi`.
    #[arg(long, default_value = "1..5", value_parser = parse_scale)]
    scale: (i64, i64),
    /// Stop at the first invalid row (default).
    #[arg(long, conflicts_with = "skip_invalid")]
    strict: bool,
    /// Drop invalid rows and report them on stderr.
    #[arg(long)]
    skip_invalid: bool,
    /// Period width in seconds for rows that carry a timestamp.
    #[arg(long, default_value_t = ingest::DEFAULT_PERIOD_WINDOW_SECS)]
    period_window: u64,
}

impl InputArgs {
    fn strictness(&self) -> Strictness {
        if self.skip_invalid {
            Strictness::SkipInvalid
        } else {
            Strictness::Strict
        }
    }

    fn load(&self, stderr: &mut dyn Write) -> Result<Loaded> {
        let opts = IngestOptions {
            format: match self.format {
                FormatArg::Csv => InputFormat::Csv,
                FormatArg::Jsonl => InputFormat::JsonLines,
            },
            space: ResponseSpace::scale(self.scale.0, self.scale.1)?,
            strictness: self.strictness(),
            period_window_secs: self.period_window,
        };
        let reader: Box<dyn Read> = if self.input.as_os_str() == "-" {
            Box::new(io::stdin())
        } else {
            Box::new(File::open(&self.input)?)
        };
        let loaded = report::load_sessions(reader, &opts)?;
        for r in &loaded.rejections {
            let _ = writeln!(stderr, "skipped line {}: {}", r.line, r.reason);
        }
        Ok(loaded)
    }
}

#[derive(Debug, Args)]
struct PriorArgs {
    /// Beta prior as `alpha,beta`.
    #[arg(long, default_value = "1,1", value_parser = parse_prior)]
    prior: BetaParams,
    /// Credible mass of the interval.
    #[arg(long, default_value = "0.95", value_parser = parse_mass)]
    mass: f64,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Write results here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IeiArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "category")]
    group_by: GroupBy,
    #[arg(long, value_enum, default_value = "pooled")]
    aggregation: AggregationArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct TdcArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fit only this category.
    #[arg(long)]
    category: Option<String>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct BucsArgs {
    /// Completions.
    #[arg(long = "n")]
    completions: u64,
    /// Trials.
    #[arg(long = "N")]
    trials: u64,
    #[command(flatten)]
    prior: PriorArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long, value_enum, default_value = "pooled")]
    aggregation: AggregationArg,
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    emit: EmitArg,
    /// Leave the generation timestamp out of the metadata.
    #[arg(long)]
    no_meta: bool,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Shipped preset name, or `all`.
    #[arg(long, conflicts_with_all = ["config", "category"])]
    preset: Option<String>,
    /// TOML file with one `[[generator]]` table per category.
    #[arg(long, conflicts_with = "category")]
    config: Option<PathBuf>,
    #[arg(long, requires = "probs")]
    category: Option<String>,
    /// Comma-separated level probabilities, lowest code first.
    #[arg(long)]
    probs: Option<String>,
    #[arg(long)]
    drift_ratings: bool,
    #[arg(long)]
    beta0: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta1: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_sd: f64,
    #[arg(long, default_value = "0.5", value_parser = parse_fraction)]
    completion_p: f64,
    #[arg(long, default_value_t = 8)]
    periods: u64,
    #[arg(long, default_value_t = 50)]
    sessions_per_period: u64,
    #[arg(long, default_value_t = 1)]
    ratings_per_session: u64,
    #[arg(long, default_value = "1..5", value_parser = parse_scale)]
    scale: (i64, i64),
    #[arg(long, env = "ADUX_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    figure: FigureArg,
    /// Session log for fig1/fig2.
    #[arg(long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Build fig1/fig2 from synthetic presets (`all` or a name).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, default_value = "1..5", value_parser = parse_scale)]
    scale: (i64, i64),
    /// Observed completion rate for fig3.
    #[arg(long, value_parser = parse_fraction)]
    p_hat: Option<f64>,
    /// Comma-separated trial counts for fig3.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<u64>,
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long, env = "ADUX_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    generator: Vec<GeneratorConfig>,
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().ansi().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(e.render().to_string().as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "adux: {e}");
            EXIT_DATA
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::Iei(a) => cmd_iei(a, stdout, stderr),
        Command::Tdc(a) => cmd_tdc(a, stdout, stderr),
        Command::Bucs(a) => cmd_bucs(a, stdout),
        Command::Report(a) => cmd_report(a, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
        Command::Plotdata(a) => cmd_plot(a, stdout, stderr),
    }
}

/// Writes `bytes` to `path` via a temporary sibling and a rename, or to
/// `stdout` when no path is given.
fn deliver(bytes: &[u8], path: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let Some(path) = path else {
        stdout.write_all(bytes)?;
        stdout.flush()?;
        return Ok(());
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.into())
}

fn cmd_iei(a: IeiArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let loaded = a.input.load(stderr)?;
    let grouping = match a.group_by {
        GroupBy::Category => Grouping::PerCategory,
        GroupBy::CategoryPeriod => Grouping::PerCategoryPerPeriod,
    };
    let grouped = iei::iei_by_group(&loaded.dataset, grouping, a.aggregation.into())?;
    for key in &grouped.omitted {
        let _ = writeln!(stderr, "no ratings for group {key}");
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["category", "period", "bits", "normalized", "n"])
        .map_err(csv_io)?;
    for (key, h) in &grouped.groups {
        let period = key.period.map(|p| p.to_string()).unwrap_or_default();
        w.write_record([
            key.category.as_str(),
            &period,
            &fmt_num(h.value),
            &fmt_num(h.normalized),
            &h.n_ratings.to_string(),
        ])
        .map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    deliver(&bytes, a.out.out.as_deref(), stdout)
}

fn cmd_tdc(a: TdcArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let loaded = a.input.load(stderr)?;
    let ds = &loaded.dataset;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let categories: Vec<String> = match &a.category {
        Some(c) if !ds.has_category(c) => return Err(Error::UnknownCategory(c.clone())),
        Some(c) => vec![c.clone()],
        None => ds.categories().into_iter().map(str::to_owned).collect(),
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "category",
        "beta0",
        "beta1",
        "stderr",
        "ci_lower",
        "ci_upper",
        "r2",
        "residual_sd",
        "n_points",
        "drift",
    ])
    .map_err(csv_io)?;
    for cat in &categories {
        let series = tdc::series_from_dataset(ds, cat)?;
        let fit = tdc::fit_tdc(&series).inspect_err(|_| {
            let _ = writeln!(stderr, "adux: category `{cat}`:");
        })?;
        let drift = match tdc::classify_drift(&fit) {
            tdc::Drift::Positive => "positive",
            tdc::Drift::Negative => "negative",
            tdc::Drift::Indeterminate => "indeterminate",
        };
        w.write_record([
            cat.as_str(),
            &fmt_num(fit.beta0),
            &fmt_num(fit.beta1),
            &fmt_num(fit.stderr_beta1),
            &fmt_num(fit.ci95_beta1.0),
            &fmt_num(fit.ci95_beta1.1),
            &fmt_num(fit.r_squared),
            &fmt_num(fit.residual_sd),
            &fit.n_points.to_string(),
            drift,
        ])
        .map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    deliver(&bytes, a.out.out.as_deref(), stdout)
}

fn cmd_bucs(a: BucsArgs, stdout: &mut dyn Write) -> Result<()> {
    let trials = TrialSummary::new(a.completions, a.trials)?;
    let r = bucs::bucs(&a.prior.prior, &trials, a.prior.mass)?;
    let mut text = String::new();
    text.push_str(&format!("prior: {}\n", a.prior.prior));
    text.push_str(&format!(
        "trials: n={} N={}\n",
        trials.completions(),
        trials.trials()
    ));
    text.push_str(&format!("posterior: {}\n", r.posterior));
    text.push_str(&format!(
        "interval: {} [{}, {}] mass {}{}\n",
        r.interval.kind,
        fmt_num(r.interval.lower),
        fmt_num(r.interval.upper),
        r.interval.mass,
        if r.interval.unique {
            ""
        } else {
            " (not unique)"
        }
    ));
    text.push_str(&format!("width: {}\n", fmt_num(r.interval.width())));
    text.push_str(&format!("mean: {}\n", fmt_num(r.mean)));
    if let Some(mode) = r.mode {
        text.push_str(&format!("mode: {}\n", fmt_num(mode)));
    }
    if trials.trials() > 0 {
        let w = bucs::wald_ci(&trials, a.prior.mass)?;
        text.push_str(&format!(
            "wald: [{}, {}] width {}\n",
            fmt_num(w.lower),
            fmt_num(w.upper),
            fmt_num(w.width())
        ));
    }
    deliver(text.as_bytes(), a.out.out.as_deref(), stdout)
}

fn cmd_report(a: ReportArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let loaded = a.input.load(stderr)?;
    let config = EvalConfig {
        prior: a.prior.prior,
        mass: a.prior.mass,
        aggregation: a.aggregation.into(),
        strictness: a.input.strictness(),
        period_window_secs: a.input.period_window,
    };
    let mut rep = report::evaluate(&loaded.dataset, &config)?;
    rep.record_ingest(&loaded);
    if !a.no_meta {
        rep.meta.generated_at = Some(chrono::Utc::now().to_rfc3339());
    }
    let _ = writeln!(stderr, "config digest: {}", rep.meta.config_digest);

    let format = match a.emit {
        EmitArg::Json => ReportFormat::Json,
        EmitArg::Csv => ReportFormat::Csv,
    };
    let mut bytes = Vec::new();
    emit_report(&rep, format, &mut bytes)?;
    deliver(&bytes, a.out.out.as_deref(), stdout)
}

fn preset_specs(name: &str, seed: u64) -> Result<Vec<GeneratorSpec>> {
    if name == "all" {
        Ok(synth::all_presets(seed))
    } else {
        Ok(vec![synth::preset(name, seed)?])
    }
}

fn parse_probs(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad probability `{p}`")))
        })
        .collect()
}

fn simulate_specs(a: &SimulateArgs) -> Result<Vec<GeneratorSpec>> {
    let space = ResponseSpace::scale(a.scale.0, a.scale.1)?;
    if let Some(name) = &a.preset {
        if space != ResponseSpace::five_point() {
            return Err(Error::InvalidParameter(
                "presets are defined on the 1..5 scale".into(),
            ));
        }
        return preset_specs(name, a.seed);
    }
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)?;
        let file: SimulateFile = toml::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))?;
        return file
            .generator
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.into_spec(&space, a.seed.wrapping_add(i as u64)))
            .collect();
    }
    let (Some(category), Some(probs)) = (&a.category, &a.probs) else {
        return Err(Error::MissingInput(
            "simulate needs --preset, --config, or --category with --probs".into(),
        ));
    };
    let cfg = GeneratorConfig {
        category: category.clone(),
        probs: parse_probs(probs)?,
        drift_ratings: a.drift_ratings,
        beta0: a.beta0,
        beta1: a.beta1,
        noise_sd: a.noise_sd,
        completion_p: a.completion_p,
        periods: a.periods,
        sessions_per_period: a.sessions_per_period,
        ratings_per_session: a.ratings_per_session,
        seed: Some(a.seed),
    };
    Ok(vec![cfg.into_spec(&space, a.seed)?])
}

fn cmd_simulate(a: SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let specs = simulate_specs(&a)?;
    let echo: Vec<GeneratorConfig> = specs.iter().map(GeneratorSpec::to_config).collect();
    let _ = writeln!(stderr, "config digest: {}", report::digest(&echo));
    let dataset = synth::gen_sessions(&specs)?;
    let mut bytes = Vec::new();
    report::write_sessions_csv(&dataset, &mut bytes)?;
    deliver(&bytes, a.out.out.as_deref(), stdout)
}

fn cmd_plot(a: PlotArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let figure = match a.figure {
        FigureArg::Fig1 => Figure::Fig1,
        FigureArg::Fig2 => Figure::Fig2,
        FigureArg::Fig3 => Figure::Fig3,
    };
    let mut bytes = Vec::new();
    match figure {
        Figure::Fig3 => {
            let p_hat = a
                .p_hat
                .ok_or_else(|| Error::MissingInput("fig3 needs --p-hat".into()))?;
            if a.sizes.is_empty() {
                return Err(Error::MissingInput("fig3 needs --sizes".into()));
            }
            let exp = WidthExperiment {
                p_hat,
                sample_sizes: a.sizes.clone(),
                prior: a.prior.prior,
                mass: a.prior.mass,
            };
            emit_plot_data(&PlotSource::Experiment(&exp), figure, &mut bytes)?;
        }
        Figure::Fig1 | Figure::Fig2 => {
            let dataset = if let Some(name) = &a.preset {
                synth::gen_sessions(&preset_specs(name, a.seed)?)?
            } else if let Some(path) = &a.input {
                let input = InputArgs {
                    input: path.clone(),
                    format: a.format,
                    scale: a.scale,
                    strict: true,
                    skip_invalid: false,
                    period_window: ingest::DEFAULT_PERIOD_WINDOW_SECS,
                };
                input.load(stderr)?.dataset
            } else {
                return Err(Error::MissingInput(
                    "fig1 and fig2 need --input or --preset".into(),
                ));
            };
            let config = EvalConfig {
                prior: a.prior.prior,
                mass: a.prior.mass,
                ..EvalConfig::default()
            };
            let rep = report::evaluate(&dataset, &config)?;
            emit_plot_data(
                &PlotSource::ReportWithData(&rep, &dataset),
                figure,
                &mut bytes,
            )?;
        }
    }
    deliver(&bytes, a.out.out.as_deref(), stdout)
}
