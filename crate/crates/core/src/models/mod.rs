//! Regression models consumed by the IRA engine.

mod boxcox;
mod external;
mod forest;
mod linear;

pub use boxcox::{box_cox_back_transform, make_feed_mill_model, BoxCoxLinearModel, FeedMillPredictor, FEED_MILL};
pub use external::ExternalModel;
pub use forest::{fit_random_forest, ForestModel, ForestParams, MaxFeatures, Tree};
pub use linear::{fit_ols, LinearModel};

use crate::error::{Error, Result};

/// A borrowed row-major block of observations.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    data: &'a [f64],
    width: usize,
}

impl<'a> Batch<'a> {
    pub fn new(data: &'a [f64], width: usize) -> Result<Self> {
        if width == 0 || !data.len().is_multiple_of(width) {
            return Err(Error::InvalidConfig(format!(
                "batch of {} values is not a whole number of {width}-wide rows",
                data.len()
            )));
        }
        Ok(Self { data, width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'a, f64> {
        self.data.chunks_exact(self.width)
    }

    pub fn data(&self) -> &'a [f64] {
        self.data
    }
}

/// Batch prediction. Implementations must be deterministic and must not
/// mutate observable state, since the engine calls them from many threads.
pub trait RegressionModel: Send + Sync {
    fn n_features(&self) -> usize;

    /// Predicts one value per row. Callers go through [`predict`], which
    /// checks the batch width and the outputs.
    fn predict_batch(&self, batch: Batch<'_>) -> Result<Vec<f64>>;

    /// Whether concurrent `predict_batch` calls may run in parallel.
    fn concurrent(&self) -> bool {
        true
    }

    /// Short description for report headers.
    fn describe(&self) -> String;

    /// Predictions for copies of `base` with column `feature` replaced by
    /// each value of `grid`. Must equal `predict_batch` on the materialized
    /// rows; models may override it with something faster.
    fn predict_sweep(&self, base: &[f64], feature: usize, grid: &[f64]) -> Result<Vec<f64>> {
        let p = base.len();
        let mut buf = Vec::with_capacity(grid.len() * p);
        for &v in grid {
            buf.extend_from_slice(base);
            let last = buf.len() - p;
            buf[last + feature] = v;
        }
        self.predict_batch(Batch::new(&buf, p)?)
    }
}

/// Validated sweep prediction; see [`RegressionModel::predict_sweep`].
pub fn predict_sweep(model: &dyn RegressionModel, base: &[f64], feature: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let p = model.n_features();
    if base.len() != p {
        return Err(Error::WidthMismatch {
            expected: p,
            found: base.len(),
        });
    }
    if feature >= p {
        return Err(Error::InvalidIndex { index: feature, p });
    }
    let out = model.predict_sweep(base, feature, grid)?;
    check_outputs(&out, grid.len())?;
    Ok(out)
}

fn check_outputs(out: &[f64], rows: usize) -> Result<()> {
    if out.len() != rows {
        return Err(Error::External(format!(
            "model returned {} values for {rows} rows",
            out.len()
        )));
    }
    if let Some(row) = out.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row, value: out[row] });
    }
    Ok(())
}

/// Validated prediction: checks the batch width against the model and
/// rejects non-finite outputs, naming the offending row.
pub fn predict(model: &dyn RegressionModel, batch: Batch<'_>) -> Result<Vec<f64>> {
    if batch.width() != model.n_features() {
        return Err(Error::WidthMismatch {
            expected: model.n_features(),
            found: batch.width(),
        });
    }
    let out = model.predict_batch(batch)?;
    check_outputs(&out, batch.len())?;
    Ok(out)
}
