//! Local one-at-a-time perturbation around a baseline row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{predict, Batch, RegressionModel};

pub const DEFAULT_STEPS: [f64; 9] = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRow {
    pub name: String,
    /// Percent change of the prediction at each step.
    pub changes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTable {
    pub steps: Vec<f64>,
    pub baseline_prediction: f64,
    pub rows: Vec<PerturbationRow>,
}

impl PerturbationTable {
    pub fn get(&self, name: &str) -> Option<&PerturbationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn entry(&self, name: &str, step: f64) -> Option<f64> {
        let j = self.steps.iter().position(|&s| s == step)?;
        Some(self.get(name)?.changes[j])
    }
}

/// For every predictor `i` and step `s`, scales `x_i` by `1 + s/100` with
/// the others held at the baseline and reports
/// `100 * (y_perturbed - y_base) / y_base`.
pub fn perturbation_table(
    model: &dyn RegressionModel,
    names: &[String],
    baseline: &[f64],
    steps: &[f64],
) -> Result<PerturbationTable> {
    let p = model.n_features();
    if baseline.len() != p || names.len() != p {
        return Err(Error::WidthMismatch {
            expected: p,
            found: baseline.len(),
        });
    }
    if steps.is_empty() {
        return Err(Error::Empty("perturbation steps"));
    }
    let base = predict(model, Batch::new(baseline, p)?)?[0];
    if base == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    let mut rows = Vec::with_capacity(p);
    let mut buf = Vec::with_capacity(steps.len() * p);
    for (i, name) in names.iter().enumerate() {
        buf.clear();
        for &s in steps {
            buf.extend_from_slice(baseline);
            let last = buf.len() - p;
            buf[last + i] = baseline[i] * (1.0 + s / 100.0);
        }
        let preds = predict(model, Batch::new(&buf, p)?).map_err(|e| Error::Evaluation {
            predictor: i,
            background: 0,
            source: Box::new(e),
        })?;
        let changes = steps
            .iter()
            .zip(preds)
            .map(|(&s, y)| if s == 0.0 { 0.0 } else { 100.0 * (y - base) / base })
            .collect();
        rows.push(PerturbationRow {
            name: name.clone(),
            changes,
        });
    }
    Ok(PerturbationTable {
        steps: steps.to_vec(),
        baseline_prediction: base,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_feed_mill_model, LinearModel, FEED_MILL};

    fn feed_mill_table() -> PerturbationTable {
        let names: Vec<String> = FEED_MILL.iter().map(|p| p.name.to_owned()).collect();
        let means: Vec<f64> = FEED_MILL.iter().map(|p| p.mean).collect();
        perturbation_table(&make_feed_mill_model(), &names, &means, &DEFAULT_STEPS).unwrap()
    }

    #[test]
    fn zero_step_is_zero() {
        let m = LinearModel::new(vec![2.0, -3.0], 1.0).unwrap();
        let t = perturbation_table(&m, &["a".into(), "b".into()], &[1.0, 2.0], &DEFAULT_STEPS).unwrap();
        for r in &t.rows {
            assert_eq!(r.changes[4], 0.0);
        }
        // y = 1 + 2a - 3b = -3; +20% on a adds 0.4
        assert!((t.entry("a", 20.0).unwrap() - 100.0 * 0.4 / -3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_baseline_rejected() {
        let m = LinearModel::new(vec![1.0], -1.0).unwrap();
        assert!(matches!(
            perturbation_table(&m, &["a".into()], &[1.0], &DEFAULT_STEPS),
            Err(Error::ZeroBaseline)
        ));
    }

    #[test]
    fn feed_mill_expanding_temperature() {
        let t = feed_mill_table();
        let up = t.entry("Expanding Temperature (°C)", 20.0).unwrap();
        let down = t.entry("Expanding Temperature (°C)", -20.0).unwrap();
        assert!((up - 0.907).abs() < 0.15, "{up}");
        assert!((down + 0.943).abs() < 0.15, "{down}");
        let fat = t.entry("Fat Content (%)", 20.0).unwrap();
        assert!(fat < 0.0 && (fat + 0.781).abs() < 0.15, "{fat}");
    }

    #[test]
    fn feed_mill_signs_follow_coefficients() {
        let t = feed_mill_table();
        for p in FEED_MILL {
            let up = t.entry(p.name, 20.0).unwrap();
            let down = t.entry(p.name, -20.0).unwrap();
            assert_eq!(up.signum(), p.coefficient.signum(), "{}", p.name);
            assert_eq!(down.signum(), -p.coefficient.signum(), "{}", p.name);
            let plus5 = t.entry(p.name, 5.0).unwrap();
            let minus5 = t.entry(p.name, -5.0).unwrap();
            assert!((plus5 + minus5).abs() < 0.05 * plus5.abs(), "{}", p.name);
        }
    }
}
