//! Command-line front end.
//!
//! Human tables round to two decimals; `csv` and `json` outputs carry full
//! precision and a manifest of every setting that affects the result.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baseline::{perturbation_table, PerturbationTable};
use crate::dataset::{load_csv, Dataset, RangePolicy};
use crate::engine::{ci_width_curve, ira, GridMode, IraConfig, IraReport, PredictorImpact, RepeatedStats};
use crate::error::Error;
use crate::models::{
    fit_ols, fit_random_forest, make_feed_mill_model, ExternalModel, ForestParams, MaxFeatures, RegressionModel,
    FEED_MILL,
};
use crate::synth::{gen_linear, gen_nonlinear, make_feed_mill_background};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or values; exit code 2.
    Usage(String),
    /// Failure while loading, fitting or computing; exit code 1.
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| {
        CliError::Run(Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Parser)]
#[command(name = "ira", version, about = "Impact Range Assessment for regression models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute IRA for every predictor (single or repeated).
    Ira(AnalysisArgs),
    /// Compute single-execution IRA over a grid of point and background counts.
    Sweep {
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Interpolated point counts (M).
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        points_list: Vec<usize>,
        /// Background sample counts (K).
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        background_list: Vec<usize>,
    },
    /// Average CI width of repeated IRA for several repeat counts.
    CiCurve {
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[arg(long, value_delimiter = ',', num_args = 0.., default_value = "10,30,50,70,90")]
        repeat_list: Vec<usize>,
    },
    /// Write a synthetic benchmark dataset as CSV.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Local perturbation analysis around a baseline row.
    Perturb {
        #[command(flatten)]
        model: ModelArgs,
        /// Baseline is the column means of this file. Defaults to the
        /// published means for the feed-mill model.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        response: Option<String>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "-20,-15,-10,-5,0,5,10,15,20"
        )]
        steps: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Linear,
    Nonlinear,
    FeedmillBg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ols,
    Rf,
    Feedmill,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridArg {
    Linear,
    Unique,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "ols")]
    pub model: ModelKind,
    /// Command that starts an external predict server (`--model external`).
    #[arg(long)]
    pub external_cmd: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub min_samples_split: usize,
    /// Features considered per split; all when omitted.
    #[arg(long)]
    pub max_features: Option<usize>,
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Forest seed; defaults to `--seed`.
    #[arg(long)]
    pub forest_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub response: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, default_value_t = 200)]
    pub background: usize,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "linear")]
    pub grid: GridArg,
    /// Restrict sweeps to the LO..HI quantile range, e.g. `0.25,0.75`.
    #[arg(long, value_delimiter = ',')]
    pub quantile_range: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2.5)]
    pub ci_lo: f64,
    #[arg(long, default_value_t = 97.5)]
    pub ci_hi: f64,
    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl AnalysisArgs {
    fn ira_config(&self) -> Result<IraConfig, CliError> {
        let range_policy = match &self.quantile_range {
            None => RangePolicy::Full,
            Some(q) if q.len() == 2 => RangePolicy::quantile(q[0], q[1]).map_err(|e| CliError::Usage(e.to_string()))?,
            Some(q) => {
                return Err(CliError::Usage(format!(
                    "--quantile-range takes LO,HI, got {} value(s)",
                    q.len()
                )))
            }
        };
        let cfg = IraConfig {
            points: self.points,
            background: self.background,
            repeats: self.repeats,
            seed: self.seed,
            grid_mode: match self.grid {
                GridArg::Linear => GridMode::Linear,
                GridArg::Unique => GridMode::UniqueValues,
            },
            range_policy,
            ci_lo: self.ci_lo,
            ci_hi: self.ci_hi,
            threads: 0,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

/// Reproducibility header attached to every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub points: usize,
    pub background: usize,
    pub repeats: usize,
    pub grid_mode: GridMode,
    pub range_policy: RangePolicy,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub model: String,
}

impl Manifest {
    fn new(command: &str, cfg: &IraConfig, model: &dyn RegressionModel) -> Self {
        Self {
            tool: "ira".into(),
            version: VERSION.into(),
            command: command.into(),
            seed: cfg.seed,
            points: cfg.points,
            background: cfg.background,
            repeats: cfg.repeats,
            grid_mode: cfg.grid_mode,
            range_policy: cfg.range_policy,
            ci_lo: cfg.ci_lo,
            ci_hi: cfg.ci_hi,
            model: model.describe(),
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# {} {} {}\n# seed={} points={} background={} repeats={} grid={} range={} ci=({},{})\n# model={}\n",
            self.tool,
            self.version,
            self.command,
            self.seed,
            self.points,
            self.background,
            self.repeats,
            self.grid_mode,
            self.range_policy,
            self.ci_lo,
            self.ci_hi,
            self.model
        )
    }
}

/// JSON shape of an IRA run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsonReport {
    pub config: Manifest,
    pub predictors: Vec<PredictorImpact>,
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Ira(a) => {
            let cfg = a.ira_config()?;
            let text = with_threads(a.threads, || cmd_ira(a, &cfg))?;
            emit(a.output.out.as_deref(), stdout, &text)
        }
        Command::Sweep {
            analysis,
            points_list,
            background_list,
        } => {
            if points_list.is_empty() || background_list.is_empty() {
                return Err(CliError::Usage(
                    "--points-list and --background-list must be nonempty".into(),
                ));
            }
            let cfg = analysis.ira_config()?;
            for &m in points_list {
                IraConfig {
                    points: m,
                    ..cfg.clone()
                }
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            }
            if background_list.contains(&0) {
                return Err(CliError::Usage("background counts must be at least 1".into()));
            }
            let text = with_threads(analysis.threads, || {
                cmd_sweep(analysis, &cfg, points_list, background_list)
            })?;
            emit(analysis.output.out.as_deref(), stdout, &text)
        }
        Command::CiCurve { analysis, repeat_list } => {
            if repeat_list.is_empty() {
                return Err(CliError::Usage("--repeat-list must be nonempty".into()));
            }
            if let Some(r) = repeat_list.iter().find(|&&r| r < 2) {
                return Err(CliError::Usage(format!("CI needs at least 2 repeats, got {r}")));
            }
            let cfg = analysis.ira_config()?;
            let text = with_threads(analysis.threads, || cmd_ci_curve(analysis, &cfg, repeat_list))?;
            emit(analysis.output.out.as_deref(), stdout, &text)
        }
        Command::Synth { kind, n, seed, out } => cmd_synth(*kind, *n, *seed, out),
        Command::Perturb {
            model,
            data,
            response,
            steps,
            output,
        } => cmd_perturb(model, data.as_deref(), response.as_deref(), steps, output, stdout),
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
        .install(f)
}

fn build_model(args: &ModelArgs, ds: Option<&Dataset>, seed: u64) -> Result<Box<dyn RegressionModel>, CliError> {
    let need_data = || ds.ok_or_else(|| CliError::Usage(format!("--model {:?} needs --data", args.model)));
    Ok(match args.model {
        ModelKind::Ols => Box::new(fit_ols(need_data()?)?),
        ModelKind::Rf => {
            let params = ForestParams {
                n_trees: args.trees,
                max_depth: args.max_depth,
                min_samples_split: args.min_samples_split,
                max_features: args.max_features.map_or(MaxFeatures::All, MaxFeatures::Count),
                bootstrap: !args.no_bootstrap,
            };
            Box::new(fit_random_forest(
                need_data()?,
                &params,
                args.forest_seed.unwrap_or(seed),
            )?)
        }
        ModelKind::Feedmill => {
            if let Some(ds) = ds {
                if ds.n_predictors() != FEED_MILL.len() {
                    return Err(Error::WidthMismatch {
                        expected: FEED_MILL.len(),
                        found: ds.n_predictors(),
                    }
                    .into());
                }
            }
            Box::new(make_feed_mill_model())
        }
        ModelKind::External => {
            let cmd = args
                .external_cmd
                .as_deref()
                .ok_or_else(|| CliError::Usage("--model external needs --external-cmd".into()))?;
            let p = ds.map_or(FEED_MILL.len(), Dataset::n_predictors);
            Box::new(ExternalModel::connect(cmd, p)?)
        }
    })
}

fn open_output<'a>(out: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(io_err(path))?)),
        None => Box::new(stdout),
    })
}

fn emit(out: Option<&Path>, stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    let mut w = open_output(out, stdout)?;
    let path = out.unwrap_or(Path::new("<stdout>"));
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

fn sorted(report: IraReport) -> IraReport {
    let mut predictors = report.predictors;
    // stable: ties keep dataset order
    predictors.sort_by(|a, b| b.ira.total_cmp(&a.ira));
    IraReport { predictors }
}

fn cmd_ira(a: &AnalysisArgs, cfg: &IraConfig) -> Result<String, CliError> {
    let ds = load_csv(&a.data, a.response.as_deref())?;
    let model = build_model(&a.model, Some(&ds), cfg.seed)?;
    let report = sorted(ira(model.as_ref(), &ds, cfg)?);
    let manifest = Manifest::new("ira", cfg, model.as_ref());
    let text = match a.output.format {
        Format::Table => report_table(&manifest, &report),
        Format::Csv => report_csv(&manifest, &report),
        Format::Json => report_json(&manifest, &report),
    };
    Ok(text)
}

pub fn report_json(manifest: &Manifest, report: &IraReport) -> String {
    let doc = JsonReport {
        config: manifest.clone(),
        predictors: report.predictors.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable report");
    s.push('\n');
    s
}

pub fn report_table(manifest: &Manifest, report: &IraReport) -> String {
    let mut s = manifest.comment_lines();
    let width = report
        .predictors
        .iter()
        .map(|p| p.name.chars().count())
        .max()
        .unwrap_or(0)
        .max(9);
    let repeated = report.predictors.iter().any(|p| p.repeated.is_some());
    if repeated {
        s.push_str(&format!(
            "{:<width$}  {:>10}  {:>10}  {:>10}\n",
            "Predictor", "Mean IRA", "CI lower", "CI upper"
        ));
    } else {
        s.push_str(&format!("{:<width$}  {:>10}\n", "Predictor", "IRA"));
    }
    for p in &report.predictors {
        // format width counts chars, not bytes, so names with `°` align
        let pad = width - p.name.chars().count();
        s.push_str(&p.name);
        s.push_str(&" ".repeat(pad));
        match &p.repeated {
            Some(r) => s.push_str(&format!(
                "  {:>10.2}  {:>10.2}  {:>10.2}\n",
                p.ira, r.ci_lower, r.ci_upper
            )),
            None => s.push_str(&format!("  {:>10.2}\n", p.ira)),
        }
    }
    s
}

/// `predictor,ira,mean,ci_lower,ci_upper,samples`; the repeated columns are
/// empty for single runs and samples are `;`-separated.
pub fn report_csv(manifest: &Manifest, report: &IraReport) -> String {
    let mut s = manifest.comment_lines();
    s.push_str("predictor,ira,mean,ci_lower,ci_upper,samples\n");
    for p in &report.predictors {
        match &p.repeated {
            Some(r) => {
                let samples: Vec<String> = r.samples.iter().map(f64::to_string).collect();
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    p.name,
                    p.ira,
                    r.mean,
                    r.ci_lower,
                    r.ci_upper,
                    samples.join(";")
                ));
            }
            None => s.push_str(&format!("{},{},,,,\n", p.name, p.ira)),
        }
    }
    s
}

/// Parses the output of [`report_csv`] back into a report.
pub fn parse_report_csv(text: &str) -> Result<IraReport, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some("predictor,ira,mean,ci_lower,ci_upper,samples") => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    let predictors = lines
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(format!("expected 6 cells: {line}"));
            }
            let repeated = if cells[2].is_empty() {
                None
            } else {
                Some(RepeatedStats {
                    mean: num(cells[2])?,
                    ci_lower: num(cells[3])?,
                    ci_upper: num(cells[4])?,
                    samples: cells[5].split(';').map(num).collect::<Result<_, _>>()?,
                })
            };
            Ok(PredictorImpact {
                name: cells[0].to_owned(),
                ira: num(cells[1])?,
                repeated,
            })
        })
        .collect::<Result<_, String>>()?;
    Ok(IraReport { predictors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    #[serde(rename = "K")]
    pub background: usize,
    #[serde(rename = "M")]
    pub points: usize,
    pub predictor: String,
    pub ira: f64,
}

fn cmd_sweep(
    a: &AnalysisArgs,
    cfg: &IraConfig,
    points_list: &[usize],
    background_list: &[usize],
) -> Result<String, CliError> {
    let ds = load_csv(&a.data, a.response.as_deref())?;
    let model = build_model(&a.model, Some(&ds), cfg.seed)?;
    let mut cells = Vec::new();
    for &k in background_list {
        for &m in points_list {
            let run = IraConfig {
                points: m,
                background: k,
                repeats: 1,
                ..cfg.clone()
            };
            let report = crate::engine::ira_single(model.as_ref(), &ds, &run)?;
            cells.extend(report.predictors.into_iter().map(|p| SweepCell {
                background: k,
                points: m,
                predictor: p.name,
                ira: p.ira,
            }));
        }
    }
    let manifest = Manifest::new(
        "sweep",
        &IraConfig {
            repeats: 1,
            ..cfg.clone()
        },
        model.as_ref(),
    );
    let text = match a.output.format {
        Format::Csv => {
            let mut s = manifest.comment_lines();
            s.push_str("K,M,predictor,ira\n");
            for c in &cells {
                s.push_str(&format!("{},{},{},{}\n", c.background, c.points, c.predictor, c.ira));
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({ "config": manifest, "cells": cells }))
                .expect("serializable sweep");
            s.push('\n');
            s
        }
        Format::Table => {
            let names = ds.predictor_names();
            let mut s = manifest.comment_lines();
            s.push_str(&format!("{:>6} {:>6}", "K", "M"));
            for n in names {
                s.push_str(&format!(" {n:>10}"));
            }
            s.push('\n');
            for row in cells.chunks(names.len()) {
                s.push_str(&format!("{:>6} {:>6}", row[0].background, row[0].points));
                for c in row {
                    s.push_str(&format!(" {:>10.2}", c.ira));
                }
                s.push('\n');
            }
            s
        }
    };
    Ok(text)
}

fn cmd_ci_curve(a: &AnalysisArgs, cfg: &IraConfig, repeats: &[usize]) -> Result<String, CliError> {
    let ds = load_csv(&a.data, a.response.as_deref())?;
    let model = build_model(&a.model, Some(&ds), cfg.seed)?;
    let curve = ci_width_curve(model.as_ref(), &ds, cfg, repeats)?;
    let manifest = Manifest::new("ci-curve", cfg, model.as_ref());
    let text = match a.output.format {
        Format::Json => {
            let rows: Vec<_> = curve
                .iter()
                .map(|&(r, w)| serde_json::json!({ "repeats": r, "avg_ci_width": w }))
                .collect();
            let mut s = serde_json::to_string_pretty(&serde_json::json!({ "config": manifest, "curve": rows }))
                .expect("serializable curve");
            s.push('\n');
            s
        }
        // plot-ready: no comment lines in csv
        Format::Csv => {
            let mut s = String::from("repeats,avg_ci_width\n");
            for (r, w) in &curve {
                s.push_str(&format!("{r},{w}\n"));
            }
            s
        }
        Format::Table => {
            let mut s = manifest.comment_lines();
            s.push_str(&format!("{:>8}  {:>14}\n", "Repeats", "Avg CI width"));
            for (r, w) in &curve {
                s.push_str(&format!("{r:>8}  {w:>14.4}\n"));
            }
            s
        }
    };
    Ok(text)
}

fn cmd_synth(kind: SynthKind, n: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    let ds = match kind {
        SynthKind::Linear => gen_linear(n, seed),
        SynthKind::Nonlinear => gen_nonlinear(n, seed),
        SynthKind::FeedmillBg => make_feed_mill_background(n, seed),
    }
    .map_err(|e| CliError::Usage(e.to_string()))?;
    ds.save_csv(out)?;
    Ok(())
}

fn cmd_perturb(
    args: &ModelArgs,
    data: Option<&Path>,
    response: Option<&str>,
    steps: &[f64],
    output: &OutputArgs,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if steps.is_empty() {
        return Err(CliError::Usage("--steps must be nonempty".into()));
    }
    let ds = data.map(|p| load_csv(p, response)).transpose()?;
    let (names, baseline): (Vec<String>, Vec<f64>) = match &ds {
        Some(ds) => (ds.predictor_names().to_vec(), ds.column_means()),
        None if args.model == ModelKind::Feedmill => (
            FEED_MILL.iter().map(|p| p.name.to_owned()).collect(),
            FEED_MILL.iter().map(|p| p.mean).collect(),
        ),
        None => return Err(CliError::Usage("perturb needs --data unless --model feedmill".into())),
    };
    let model = build_model(args, ds.as_ref(), args.forest_seed.unwrap_or(0))?;
    let table = perturbation_table(model.as_ref(), &names, &baseline, steps)?;
    let text = match output.format {
        Format::Table => perturbation_text(&table),
        Format::Csv => {
            let mut s = String::from("predictor");
            for step in &table.steps {
                s.push_str(&format!(",{step}"));
            }
            s.push('\n');
            for row in &table.rows {
                s.push_str(&row.name);
                for v in &row.changes {
                    s.push_str(&format!(",{v}"));
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&serde_json::json!({
                "model": model.describe(),
                "baseline": baseline,
                "table": table,
            }))
            .expect("serializable table");
            s.push('\n');
            s
        }
    };
    emit(output.out.as_deref(), stdout, &text)
}

fn perturbation_text(t: &PerturbationTable) -> String {
    let width = t.rows.iter().map(|r| r.name.chars().count()).max().unwrap_or(0).max(9);
    let mut s = format!("# baseline prediction {:.4}\n", t.baseline_prediction);
    s.push_str(&format!("{:<width$}", "Predictor"));
    for step in &t.steps {
        s.push_str(&format!(" {:>7}", format!("{step}%")));
    }
    s.push('\n');
    for row in &t.rows {
        s.push_str(&row.name);
        s.push_str(&" ".repeat(width - row.name.chars().count()));
        for v in &row.changes {
            s.push_str(&format!(" {v:>7.3}"));
        }
        s.push('\n');
    }
    s
}
