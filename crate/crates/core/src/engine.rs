//! Impact Range Assessment.
//!
//! For each predictor: build a grid over its range, draw K background rows
//! with replacement, sweep the predictor over the grid on each background
//! row while holding the other columns fixed, and average the K resulting
//! prediction ranges (max - min). The repeated variant reruns that with
//! fresh background draws and summarizes the R values by their mean and
//! percentile interval.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{quantile_sorted, Dataset, RangePolicy};
use crate::error::{Error, Result};
use crate::models::{predict_sweep, RegressionModel};
use crate::rng::background_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// M evenly spaced points spanning the effective range, endpoints included.
    #[default]
    Linear,
    /// Distinct observed values inside the effective range.
    UniqueValues,
}

impl fmt::Display for GridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridMode::Linear => "linear",
            GridMode::UniqueValues => "unique_values",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IraConfig {
    /// Interpolated points per predictor (M).
    pub points: usize,
    /// Background observations per predictor (K).
    pub background: usize,
    /// Number of repeats (R); 1 is a single execution.
    pub repeats: usize,
    pub seed: u64,
    pub grid_mode: GridMode,
    pub range_policy: RangePolicy,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Worker threads; 0 uses the ambient rayon pool. Never affects results.
    #[serde(skip)]
    pub threads: usize,
}

impl Default for IraConfig {
    fn default() -> Self {
        Self {
            points: 100,
            background: 200,
            repeats: 1,
            seed: 0,
            grid_mode: GridMode::Linear,
            range_policy: RangePolicy::Full,
            ci_lo: 2.5,
            ci_hi: 97.5,
            threads: 0,
        }
    }
}

impl IraConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.points < 2 {
            return bad(format!("points must be at least 2, got {}", self.points));
        }
        if self.background < 1 {
            return bad("background must be at least 1".into());
        }
        if self.repeats < 1 {
            return bad("repeats must be at least 1".into());
        }
        if !(self.ci_lo > 0.0 && self.ci_hi < 100.0 && self.ci_lo < self.ci_hi) {
            return bad(format!(
                "CI percentiles need 0 < lo < hi < 100, got ({}, {})",
                self.ci_lo, self.ci_hi
            ));
        }
        if let RangePolicy::Quantile { lo, hi } = self.range_policy {
            RangePolicy::quantile(lo, hi)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedStats {
    pub mean: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorImpact {
    pub name: String,
    /// Single-execution IRA, or the mean over repeats.
    pub ira: f64,
    #[serde(flatten, default, skip_serializing_if = "Option::is_none")]
    pub repeated: Option<RepeatedStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IraReport {
    pub predictors: Vec<PredictorImpact>,
}

impl IraReport {
    pub fn get(&self, name: &str) -> Option<&PredictorImpact> {
        self.predictors.iter().find(|p| p.name == name)
    }

    pub fn values(&self) -> Vec<f64> {
        self.predictors.iter().map(|p| p.ira).collect()
    }

    /// Predictor names by descending IRA; ties keep dataset order.
    pub fn ranking(&self) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.predictors.len()).collect();
        idx.sort_by(|&a, &b| self.predictors[b].ira.total_cmp(&self.predictors[a].ira));
        idx.into_iter().map(|i| self.predictors[i].name.as_str()).collect()
    }
}

/// `m` evenly spaced values from `low` to `high`, both endpoints exact.
pub fn interpolate_grid(low: f64, high: f64, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidConfig(format!("grid needs at least 2 points, got {m}")));
    }
    if low > high {
        return Err(Error::InvalidConfig(format!("grid bounds reversed: {low} > {high}")));
    }
    let span = high - low;
    let last = (m - 1) as f64;
    let mut grid: Vec<f64> = (0..m).map(|j| low + span * j as f64 / last).collect();
    grid[m - 1] = high;
    Ok(grid)
}

/// Sorted distinct values observed in column `i`.
pub fn unique_grid(ds: &Dataset, i: usize) -> Result<Vec<f64>> {
    if i >= ds.n_predictors() {
        return Err(Error::InvalidIndex {
            index: i,
            p: ds.n_predictors(),
        });
    }
    let mut col = ds.column(i);
    col.sort_by(f64::total_cmp);
    col.dedup();
    Ok(col)
}

/// The sweep grid for predictor `i` under `cfg`'s grid mode and range policy.
pub fn predictor_grid(ds: &Dataset, i: usize, cfg: &IraConfig) -> Result<Vec<f64>> {
    let (low, high) = ds.effective_range(i, cfg.range_policy)?;
    match cfg.grid_mode {
        GridMode::Linear => interpolate_grid(low, high, cfg.points),
        GridMode::UniqueValues => Ok(unique_grid(ds, i)?
            .into_iter()
            .filter(|v| (low..=high).contains(v))
            .collect()),
    }
}

/// Draws `k` row indices uniformly with replacement.
pub fn sample_background(ds: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = ds.n_rows();
    (0..k).map(|_| rng.gen_range(0..n)).collect()
}

/// Average over `background` rows of the prediction range obtained by
/// sweeping column `predictor` over `grid`. A grid with fewer than two
/// distinct values gives 0.
pub fn range_ira<'a>(
    model: &dyn RegressionModel,
    predictor: usize,
    grid: &[f64],
    background: impl IntoIterator<Item = &'a [f64]>,
) -> Result<f64> {
    let p = model.n_features();
    if predictor >= p {
        return Err(Error::InvalidIndex { index: predictor, p });
    }
    let degenerate = grid.first() == grid.last();
    let mut total = 0.0;
    let mut count = 0usize;
    for (k, row) in background.into_iter().enumerate() {
        count += 1;
        if degenerate {
            continue;
        }
        let preds = predict_sweep(model, row, predictor, grid).map_err(|e| Error::Evaluation {
            predictor,
            background: k,
            source: Box::new(e),
        })?;
        let (lo, hi) = preds.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
        total += hi - lo;
    }
    if count == 0 {
        return Err(Error::Empty("background rows"));
    }
    Ok(total / count as f64)
}

fn check_inputs(model: &dyn RegressionModel, ds: &Dataset, cfg: &IraConfig) -> Result<()> {
    cfg.validate()?;
    if model.n_features() != ds.n_predictors() {
        return Err(Error::WidthMismatch {
            expected: model.n_features(),
            found: ds.n_predictors(),
        });
    }
    Ok(())
}

fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// IRA samples for repeats `0..repeats`, indexed `[predictor][repeat]`.
fn ira_samples(model: &dyn RegressionModel, ds: &Dataset, cfg: &IraConfig, repeats: usize) -> Result<Vec<Vec<f64>>> {
    check_inputs(model, ds, cfg)?;
    let p = ds.n_predictors();
    let grids = (0..p).map(|i| predictor_grid(ds, i, cfg)).collect::<Result<Vec<_>>>()?;
    let one = |task: usize| -> Result<f64> {
        let (r, i) = (task / p, task % p);
        let mut rng = background_stream(cfg.seed, r as u32, i as u32);
        let idx = sample_background(ds, cfg.background, &mut rng);
        range_ira(model, i, &grids[i], idx.iter().map(|&j| ds.row(j)))
    };
    let tasks = repeats * p;
    let flat: Vec<f64> = if model.concurrent() && cfg.threads != 1 {
        run_in_pool(cfg.threads, || {
            (0..tasks).into_par_iter().map(one).collect::<Result<Vec<_>>>()
        })??
    } else {
        (0..tasks).map(one).collect::<Result<Vec<_>>>()?
    };
    Ok((0..p)
        .map(|i| (0..repeats).map(|r| flat[r * p + i]).collect())
        .collect())
}

/// Single-execution IRA; `cfg.repeats` is ignored.
pub fn ira_single(model: &dyn RegressionModel, ds: &Dataset, cfg: &IraConfig) -> Result<IraReport> {
    let samples = ira_samples(model, ds, cfg, 1)?;
    Ok(IraReport {
        predictors: ds
            .predictor_names()
            .iter()
            .zip(samples)
            .map(|(name, s)| PredictorImpact {
                name: name.clone(),
                ira: s[0],
                repeated: None,
            })
            .collect(),
    })
}

/// Repeated IRA with `cfg.repeats >= 2` independent background draws per
/// predictor. Repeat 0 uses the same draws as [`ira_single`].
pub fn ira_repeated(model: &dyn RegressionModel, ds: &Dataset, cfg: &IraConfig) -> Result<IraReport> {
    if cfg.repeats < 2 {
        return Err(Error::InvalidConfig(format!(
            "repeated IRA needs at least 2 repeats, got {}",
            cfg.repeats
        )));
    }
    let samples = ira_samples(model, ds, cfg, cfg.repeats)?;
    let predictors = ds
        .predictor_names()
        .iter()
        .zip(samples)
        .map(|(name, samples)| {
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            let stats = RepeatedStats {
                mean,
                ci_lower: percentile(&samples, cfg.ci_lo)?,
                ci_upper: percentile(&samples, cfg.ci_hi)?,
                samples,
            };
            Ok(PredictorImpact {
                name: name.clone(),
                ira: mean,
                repeated: Some(stats),
            })
        })
        .collect::<Result<_>>()?;
    Ok(IraReport { predictors })
}

/// Single or repeated IRA depending on `cfg.repeats`.
pub fn ira(model: &dyn RegressionModel, ds: &Dataset, cfg: &IraConfig) -> Result<IraReport> {
    if cfg.repeats > 1 {
        ira_repeated(model, ds, cfg)
    } else {
        ira_single(model, ds, cfg)
    }
}

/// Percentile `q` (0..=100) by linear interpolation between closest order
/// statistics.
pub fn percentile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("percentile samples"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidConfig(format!("percentile must be in [0, 100], got {q}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q / 100.0))
}

/// Average CI width across predictors for each repeat count.
pub fn ci_width_curve(
    model: &dyn RegressionModel,
    ds: &Dataset,
    cfg: &IraConfig,
    repeat_counts: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if repeat_counts.is_empty() {
        return Err(Error::Empty("repeat counts"));
    }
    if let Some(&r) = repeat_counts.iter().find(|&&r| r < 2) {
        return Err(Error::InvalidConfig(format!(
            "every repeat count must be at least 2, got {r}"
        )));
    }
    repeat_counts
        .iter()
        .map(|&r| {
            let report = ira_repeated(
                model,
                ds,
                &IraConfig {
                    repeats: r,
                    ..cfg.clone()
                },
            )?;
            let width = report
                .predictors
                .iter()
                .map(|p| {
                    let s = p.repeated.as_ref().expect("repeated stats");
                    s.ci_upper - s.ci_lower
                })
                .sum::<f64>()
                / report.predictors.len() as f64;
            Ok((r, width))
        })
        .collect()
}
