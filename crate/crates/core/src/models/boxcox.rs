//! Linear models fitted on a Box-Cox transformed response.

use crate::error::{Error, Result};

use super::{Batch, LinearModel, RegressionModel};

/// Inverse Box-Cox transform `(lambda*t + 1)^(1/lambda)`, evaluated as
/// `exp(ln(lambda*t + 1) / lambda)` so `t` around 1e9 does not overflow.
pub fn box_cox_back_transform(t: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "box-cox lambda must be finite and nonzero, got {lambda}"
        )));
    }
    let base = lambda * t + 1.0;
    if base.is_nan() || base <= 0.0 {
        return Err(Error::BoxCoxDomain { t, lambda, value: base });
    }
    Ok((base.ln() / lambda).exp())
}

/// A linear model predicting the transformed response `T`, followed by the
/// back-transform to the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCoxLinearModel {
    inner: LinearModel,
    lambda: f64,
    names: Option<Vec<String>>,
}

impl BoxCoxLinearModel {
    pub fn new(inner: LinearModel, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self {
            inner,
            lambda,
            names: None,
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.inner.coefficients().len() {
            return Err(Error::InvalidConfig("one name per coefficient required".into()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn inner(&self) -> &LinearModel {
        &self.inner
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Coefficient of a named predictor, on the transformed scale.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        let i = self.names.as_ref()?.iter().position(|n| n == name)?;
        Some(self.inner.coefficients()[i])
    }

    pub fn eval(&self, row: &[f64]) -> Result<f64> {
        box_cox_back_transform(self.inner.eval(row), self.lambda)
    }
}

impl RegressionModel for BoxCoxLinearModel {
    fn n_features(&self) -> usize {
        self.inner.coefficients().len()
    }

    fn predict_batch(&self, batch: Batch<'_>) -> Result<Vec<f64>> {
        batch.rows().map(|row| self.eval(row)).collect()
    }

    fn describe(&self) -> String {
        format!("boxcox-linear(lambda={})", self.lambda)
    }
}

/// One row of the published feed-mill pellet durability model: summary
/// statistics of the training data and the transformed-scale coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedMillPredictor {
    pub name: &'static str,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    pub coefficient: f64,
}

const fn fm(
    name: &'static str,
    mean: f64,
    sd: f64,
    min: f64,
    median: f64,
    max: f64,
    coefficient: f64,
) -> FeedMillPredictor {
    FeedMillPredictor {
        name,
        mean,
        sd,
        min,
        median,
        max,
        coefficient,
    }
}

pub const FEED_MILL: [FeedMillPredictor; 9] = [
    fm("Amino Acids (%)", 0.4, 0.2, 0.0, 0.4, 1.0, 4.42e8),
    fm("ADF Content (%)", 3.4, 1.2, 1.7, 2.9, 7.2, 1.41e8),
    fm("Dehydrated Bakery Meal (%)", 6.1, 5.5, 0.0, 5.9, 16.5, 3.06e7),
    fm("Indoor Humidity (Pelletizer) (%)", 28.1, 9.8, 10.5, 27.3, 53.8, 1.20e7),
    fm("Expanding Temperature (°C)", 92.1, 6.9, 62.5, 91.8, 111.7, 7.50e6),
    fm(
        "Cumulative Production (Tonnes)",
        20687.7,
        13415.3,
        55.4,
        18602.4,
        47953.9,
        -5.29e3,
    ),
    fm("Ambient Humidity (%)", 65.3, 13.1, 22.5, 66.5, 91.8, -3.88e6),
    fm("Fat Content (%)", 3.7, 0.8, 2.1, 3.7, 7.5, -1.55e8),
    fm("Processing Aid Water (%)", 0.9, 0.2, 0.0, 0.8, 1.5, -2.17e8),
];

pub const FEED_MILL_INTERCEPT: f64 = 2.14e9;
pub const FEED_MILL_LAMBDA: f64 = 5.18;

/// The nine-predictor pellet durability model with its published
/// coefficients, intercept and Box-Cox parameter.
pub fn make_feed_mill_model() -> BoxCoxLinearModel {
    let inner = LinearModel::new(FEED_MILL.iter().map(|p| p.coefficient).collect(), FEED_MILL_INTERCEPT)
        .expect("finite coefficients");
    BoxCoxLinearModel::new(inner, FEED_MILL_LAMBDA)
        .and_then(|m| m.with_names(FEED_MILL.iter().map(|p| p.name.to_owned()).collect()))
        .expect("valid feed mill model")
}
