//! Impact Range Assessment (IRA) for regression models.
//!
//! IRA scores each predictor by the largest change in a model's prediction
//! that sweeping the predictor across its observed range can produce,
//! averaged over background observations drawn from the data. See
//! [`engine`] for the procedure, [`models`] for the model abstraction and
//! built-in model families, and [`cli`] for the command-line front end.

pub mod baseline;
pub mod cli;
pub mod dataset;
pub mod engine;
mod error;
pub mod models;
pub mod rng;
pub mod synth;

pub use dataset::{load_csv, ColumnStats, Dataset, RangePolicy};
pub use engine::{ira, ira_repeated, ira_single, GridMode, IraConfig, IraReport, PredictorImpact};
pub use error::{Error, Result};
pub use models::{Batch, RegressionModel};
