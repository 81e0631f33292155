//! Seeded synthetic benchmark data.
//!
//! Predictors are independent normals drawn row by row in column order with
//! the Box-Muller cosine branch; the additive noise term is drawn last in
//! each row. Same `(n, seed)` gives bit-identical output on every platform.

use rand::Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::FEED_MILL;
use crate::rng::{standard_normal, synth_stream};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub seed: u64,
    /// `(mean, sd)` for each predictor.
    pub predictors: Vec<(f64, f64)>,
    /// Bounds of the uniform noise term; `(0, 0)` disables it.
    pub noise: (f64, f64),
}

impl GeneratorSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("sample count must be at least 1".into()));
        }
        if self.predictors.iter().any(|&(_, sd)| !(sd > 0.0)) {
            return Err(Error::InvalidConfig(
                "predictor standard deviations must be positive".into(),
            ));
        }
        let (lo, hi) = self.noise;
        if lo > hi {
            return Err(Error::InvalidConfig(format!("noise bounds reversed: ({lo}, {hi})")));
        }
        Ok(())
    }
}

/// Generated predictors plus the noise drawn for each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSample {
    pub rows: Vec<Vec<f64>>,
    pub noise: Vec<f64>,
}

pub fn generate(spec: &GeneratorSpec) -> Result<SyntheticSample> {
    spec.validate()?;
    let mut rng = synth_stream(spec.seed);
    let (lo, hi) = spec.noise;
    let mut rows = Vec::with_capacity(spec.n);
    let mut noise = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        rows.push(
            spec.predictors
                .iter()
                .map(|&(mu, sd)| mu + sd * standard_normal(&mut rng))
                .collect(),
        );
        // Uniform on [lo, hi); the draw is consumed even when noise is off.
        let u: f64 = rng.gen();
        noise.push(lo + (hi - lo) * u);
    }
    Ok(SyntheticSample { rows, noise })
}

pub const LINEAR_PREDICTORS: [(f64, f64); 8] = [
    (0.0, 1.0),
    (-12.0, 6.0),
    (5.0, 2.5),
    (1.0, 5.0),
    (-8.0, 0.5),
    (10.0, 5.0),
    (3.0, 5.0),
    (-2.0, 4.0),
];

pub const NONLINEAR_PREDICTORS: [(f64, f64); 8] = [
    (1.0, 0.5),
    (5.0, 2.0),
    (-6.0, 1.2),
    (0.0, 0.7),
    (0.15, 2.1),
    (-5.0, 2.2),
    (2.8, 0.7),
    (-4.5, 1.8),
];

/// `Y = 2 X1 - 0.5 X3 + 0.05 X4 + 0.1 X6 - 1.2 X7`, noise excluded.
pub fn linear_response(x: &[f64]) -> f64 {
    2.0 * x[0] - 0.5 * x[2] + 0.05 * x[3] + 0.1 * x[5] - 1.2 * x[6]
}

/// `Y = -X1 X2 - 0.1 X3^2 + 0.08 exp(X5) + 6.1 cos(X6)`, noise excluded.
pub fn nonlinear_response(x: &[f64]) -> f64 {
    -x[0] * x[1] - 0.1 * x[2] * x[2] + 0.08 * x[4].exp() + 6.1 * x[5].cos()
}

fn x_names(p: usize) -> Vec<String> {
    (1..=p).map(|j| format!("X{j}")).collect()
}

fn with_response(sample: &SyntheticSample, f: fn(&[f64]) -> f64, n: usize) -> Result<Dataset> {
    let y: Vec<f64> = sample.rows.iter().zip(&sample.noise).map(|(x, e)| f(x) + e).collect();
    if n < 2 {
        return Err(Error::InvalidDataset(format!("need at least 2 observations, got {n}")));
    }
    Dataset::from_rows(x_names(sample.rows[0].len()), &sample.rows)?.with_response("Y", y)
}

pub fn linear_spec(n: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        n,
        seed,
        predictors: LINEAR_PREDICTORS.to_vec(),
        noise: (-5.0, 5.0),
    }
}

pub fn nonlinear_spec(n: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        n,
        seed,
        predictors: NONLINEAR_PREDICTORS.to_vec(),
        noise: (-3.0, 3.0),
    }
}

/// Eight independent normal predictors X1..X8 and a linear response `Y`
/// with uniform noise on [-5, 5).
pub fn gen_linear(n: usize, seed: u64) -> Result<Dataset> {
    gen_linear_from(&linear_spec(n, seed))
}

pub fn gen_linear_from(spec: &GeneratorSpec) -> Result<Dataset> {
    with_response(&generate(spec)?, linear_response, spec.n)
}

/// Eight independent normal predictors X1..X8 and a nonlinear response `Y`
/// with uniform noise on [-3, 3). X4, X7 and X8 do not enter the response.
pub fn gen_nonlinear(n: usize, seed: u64) -> Result<Dataset> {
    gen_nonlinear_from(&nonlinear_spec(n, seed))
}

pub fn gen_nonlinear_from(spec: &GeneratorSpec) -> Result<Dataset> {
    with_response(&generate(spec)?, nonlinear_response, spec.n)
}

/// Surrogate feed-mill background: each column is a normal with the
/// published mean and sd, clipped to the published min and max.
///
/// A `Dataset` needs two rows, so `n = 1` is reported as rows only through
/// [`feed_mill_rows`].
pub fn make_feed_mill_background(n: usize, seed: u64) -> Result<Dataset> {
    let rows = feed_mill_rows(n, seed)?;
    Dataset::from_rows(FEED_MILL.iter().map(|p| p.name.to_owned()).collect(), &rows)
}

pub fn feed_mill_rows(n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let spec = GeneratorSpec {
        n,
        seed,
        predictors: FEED_MILL.iter().map(|p| (p.mean, p.sd)).collect(),
        noise: (0.0, 0.0),
    };
    Ok(generate(&spec)?
        .rows
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(FEED_MILL.iter())
                .map(|(v, p)| v.clamp(p.min, p.max))
                .collect()
        })
        .collect())
}
