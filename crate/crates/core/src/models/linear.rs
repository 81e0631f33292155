use crate::dataset::Dataset;
use crate::error::{Error, Result};

use super::{Batch, RegressionModel};

/// `y = intercept + sum(coefficients[i] * x[i])`
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    coefficients: Vec<f64>,
    intercept: f64,
}

impl LinearModel {
    pub fn new(coefficients: Vec<f64>, intercept: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidConfig(
                "linear model needs at least one coefficient".into(),
            ));
        }
        if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("linear model parameters must be finite".into()));
        }
        Ok(Self {
            coefficients,
            intercept,
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn eval(&self, row: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(row)
            .fold(self.intercept, |acc, (a, x)| acc + a * x)
    }
}

impl RegressionModel for LinearModel {
    fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    fn predict_batch(&self, batch: Batch<'_>) -> Result<Vec<f64>> {
        Ok(batch.rows().map(|row| self.eval(row)).collect())
    }

    fn describe(&self) -> String {
        "linear".into()
    }
}

/// Ordinary least squares with an intercept, solved by Householder QR of
/// the design matrix `[1 | X]`.
pub fn fit_ols(ds: &Dataset) -> Result<LinearModel> {
    let y = ds
        .response()
        .ok_or_else(|| Error::InvalidDataset("OLS needs a response column".into()))?;
    let n = ds.n_rows();
    let cols = ds.n_predictors() + 1;
    if n <= ds.n_predictors() {
        return Err(Error::InvalidDataset(format!(
            "OLS needs more rows than predictors ({n} <= {})",
            ds.n_predictors()
        )));
    }

    // column-major design matrix
    let mut a = vec![0.0; n * cols];
    a[..n].fill(1.0);
    for (r, row) in ds.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            a[(j + 1) * n + r] = *v;
        }
    }
    let mut b = y.to_vec();

    let scale: Vec<f64> = (0..cols)
        .map(|j| a[j * n..(j + 1) * n].iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut diag = vec![0.0; cols];

    for k in 0..cols {
        let (done, rest) = a.split_at_mut((k + 1) * n);
        let col = &mut done[k * n..];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-10 * scale[k].max(f64::MIN_POSITIVE) {
            return Err(Error::SingularFit { column: k });
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        col[k] -= alpha;
        let vnorm2 = col[k..].iter().map(|v| v * v).sum::<f64>();
        // Reflect the remaining columns and the right-hand side.
        for other in rest.chunks_exact_mut(n) {
            let dot: f64 = col[k..].iter().zip(&other[k..]).map(|(v, x)| v * x).sum();
            let f = 2.0 * dot / vnorm2;
            for (x, v) in other[k..].iter_mut().zip(&col[k..]) {
                *x -= f * v;
            }
        }
        let dot: f64 = col[k..].iter().zip(&b[k..]).map(|(v, x)| v * x).sum();
        let f = 2.0 * dot / vnorm2;
        for (x, v) in b[k..].iter_mut().zip(&col[k..]) {
            *x -= f * v;
        }
        diag[k] = alpha;
    }

    // Back substitution on R.
    let mut beta = vec![0.0; cols];
    for k in (0..cols).rev() {
        let mut s = b[k];
        for j in k + 1..cols {
            s -= a[j * n + k] * beta[j];
        }
        beta[k] = s / diag[k];
    }
    let intercept = beta.remove(0);
    LinearModel::new(beta, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ds_xy(xs: &[Vec<f64>], y: &[f64]) -> Dataset {
        let p = xs[0].len();
        Dataset::from_rows((0..p).map(|j| format!("x{j}")).collect(), xs)
            .unwrap()
            .with_response("y", y.to_vec())
            .unwrap()
    }

    #[test]
    fn exact_line() {
        let m = fit_ols(&ds_xy(&[vec![0.0], vec![1.0], vec![2.0]], &[1.0, 4.0, 7.0])).unwrap();
        assert_abs_diff_eq!(m.coefficients()[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.intercept(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn duplicate_columns_are_singular() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| (i * i) as f64).collect();
        assert!(matches!(
            fit_ols(&ds_xy(&xs, &y)),
            Err(Error::SingularFit { column: 2 })
        ));
    }

    #[test]
    fn constant_column_is_singular() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 3.0]).collect();
        let y: Vec<f64> = (0..5).map(|i| i as f64).collect();
        assert!(fit_ols(&ds_xy(&xs, &y)).is_err());
    }

    #[test]
    fn needs_response_and_rows() {
        let ds = Dataset::from_rows(vec!["a".into()], &[vec![1.0], vec![2.0]]).unwrap();
        assert!(fit_ols(&ds).is_err());
        let ds = ds_xy(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[1.0, 2.0]);
        assert!(fit_ols(&ds).is_err());
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.37).sin() * 10.0, t * t / 50.0, (t * 1.3).cos()]
            })
            .collect();
        let y: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, r)| 1.5 * r[0] - 0.2 * r[1] + 4.0 * r[2] + 7.0 + ((i * 7919) % 13) as f64 / 5.0)
            .collect();
        let ds = ds_xy(&xs, &y);
        let m = fit_ols(&ds).unwrap();
        let resid: Vec<f64> = ds.rows().zip(&y).map(|(r, yi)| yi - m.eval(r)).collect();
        let rnorm = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
        let sum: f64 = resid.iter().sum();
        assert!(sum.abs() < 1e-6 * rnorm * (40f64).sqrt());
        for j in 0..3 {
            let col = ds.column(j);
            let cnorm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let dot: f64 = col.iter().zip(&resid).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-6 * cnorm * rnorm, "column {j}: {dot}");
        }
    }
}
