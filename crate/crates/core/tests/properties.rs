use ira::engine::{ira_single, range_ira};
use ira::models::{fit_ols, fit_random_forest, Batch, ForestParams, LinearModel};
use ira::synth::{gen_linear, gen_linear_from, gen_nonlinear, linear_spec, LINEAR_PREDICTORS, NONLINEAR_PREDICTORS};
use ira::{ColumnStats, Dataset, IraConfig, RegressionModel, Result};
use proptest::prelude::*;

// Sample mean and sd of each column within three standard errors of the
// generating distribution.
fn check_bands(ds: &Dataset, params: &[(f64, f64)]) {
    let n = ds.n_rows() as f64;
    for ((name, stats), &(mu, sigma)) in ds.describe().iter().zip(params) {
        let mean_tol = 3.0 * sigma / n.sqrt();
        let sd_tol = 3.0 * sigma / (2.0 * n).sqrt();
        assert!(
            (stats.mean - mu).abs() <= mean_tol,
            "{name} mean {} vs {mu}",
            stats.mean
        );
        assert!((stats.sd - sigma).abs() <= sd_tol, "{name} sd {} vs {sigma}", stats.sd);
    }
}

#[test]
fn linear_columns_match_generator() {
    let ds = gen_linear(1000, 21).unwrap();
    check_bands(&ds, &LINEAR_PREDICTORS);
    let x1 = &ds.describe()[0].1;
    assert!(x1.mean.abs() <= 0.1 && (x1.sd - 1.0).abs() <= 0.07);
    let x3 = &ds.describe()[2].1;
    assert!((x3.mean - 5.0).abs() <= 0.24 && (x3.sd - 2.5).abs() <= 0.17);
}

#[test]
fn nonlinear_columns_match_generator() {
    let ds = gen_nonlinear(1000, 21).unwrap();
    check_bands(&ds, &NONLINEAR_PREDICTORS);
    assert!((ds.describe()[5].1.mean + 5.0).abs() <= 0.21);
}

#[test]
fn describe_ignores_row_order() {
    let ds = gen_linear(200, 3).unwrap();
    let mut rows: Vec<Vec<f64>> = ds.rows().map(<[f64]>::to_vec).collect();
    rows.reverse();
    rows.rotate_left(37);
    let shuffled = Dataset::from_rows(ds.predictor_names().to_vec(), &rows).unwrap();
    for ((_, a), (_, b)) in ds.describe().iter().zip(shuffled.describe()) {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
        assert!(close(a.mean, b.mean) && close(a.sd, b.sd));
        assert_eq!((a.min, a.median, a.max), (b.min, b.median, b.max));
    }
}

#[test]
fn ols_recovers_coefficients() {
    let model = fit_ols(&gen_linear(1000, 8).unwrap()).unwrap();
    assert!((model.coefficients()[0] - 2.0).abs() <= 0.30);
    assert!((model.coefficients()[6] + 1.2).abs() <= 0.20);

    let noiseless = gen_linear_from(&ira::synth::GeneratorSpec {
        noise: (0.0, 0.0),
        ..linear_spec(300, 8)
    })
    .unwrap();
    let exact = fit_ols(&noiseless).unwrap();
    let truth = [2.0, 0.0, -0.5, 0.05, 0.0, 0.1, -1.2, 0.0];
    for (got, want) in exact.coefficients().iter().zip(truth) {
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }
}

#[test]
fn forest_fits_training_data() {
    let ds = gen_nonlinear(1000, 2).unwrap();
    let rf = fit_random_forest(&ds, &ForestParams::default(), 2).unwrap();
    let y = ds.response().unwrap();
    let pred = rf
        .predict_batch(Batch::new(ds.values(), ds.n_predictors()).unwrap())
        .unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sse: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    assert!(1.0 - sse / sst > 0.9, "R2 {}", 1.0 - sse / sst);
}

#[test]
fn summary_stats_of_constant() {
    let s = ColumnStats::of(&[4.0; 5]);
    assert_eq!((s.mean, s.sd, s.min, s.max), (4.0, 0.0, 4.0, 4.0));
}

/// Linear model followed by a monotone increasing transform.
struct Warped(LinearModel, fn(f64) -> f64);

impl RegressionModel for Warped {
    fn n_features(&self) -> usize {
        self.0.coefficients().len()
    }

    fn predict_batch(&self, batch: Batch<'_>) -> Result<Vec<f64>> {
        Ok(batch.rows().map(|r| (self.1)(self.0.eval(r))).collect())
    }

    fn describe(&self) -> String {
        "warped".into()
    }
}

fn small_dataset(rows: &[Vec<f64>]) -> Dataset {
    let names = (0..rows[0].len()).map(|i| format!("v{i}")).collect();
    Dataset::from_rows(names, rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // A finer grid that contains the coarse one never lowers IRA.
    #[test]
    fn refining_the_grid_never_lowers_ira(
        rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 6..20),
        y in prop::collection::vec(-10.0f64..10.0, 20),
        m in 2usize..12,
        seed in 0u64..1000,
    ) {
        let ds = small_dataset(&rows).with_response("y", y[..rows.len()].to_vec()).unwrap();
        let params = ForestParams { n_trees: 5, ..ForestParams::default() };
        let rf = fit_random_forest(&ds, &params, seed).unwrap();
        let base = IraConfig { points: m, background: 10, seed, ..IraConfig::default() };
        let fine = IraConfig { points: 2 * m - 1, ..base.clone() };
        let coarse = ira_single(&rf, &ds, &base).unwrap();
        let refined = ira_single(&rf, &ds, &fine).unwrap();
        for (c, f) in coarse.values().iter().zip(refined.values()) {
            prop_assert!(f >= *c, "{f} < {c}");
        }
    }

    // With every sweep starting from the same prediction, an increasing
    // transform of a model with positive slopes keeps the IRA ranking.
    #[test]
    fn monotone_transform_keeps_ranking(
        coefs in prop::collection::vec(0.05f64..3.0, 4),
        rows in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 4), 4..12),
    ) {
        let ds = small_dataset(&rows);
        let lin = LinearModel::new(coefs.clone(), 0.5).unwrap();
        let warped = Warped(lin.clone(), |t| t.powi(3) + t.exp());
        let mins: Vec<f64> = (0..4)
            .map(|i| ds.column(i).into_iter().fold(f64::INFINITY, f64::min))
            .collect();
        let score = |m: &dyn RegressionModel, i: usize| {
            let col = ds.column(i);
            let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let grid = ira::engine::interpolate_grid(mins[i], max, 25).unwrap();
            range_ira(m, i, &grid, [&mins[..]]).unwrap()
        };
        let rank = |m: &dyn RegressionModel| {
            let s: Vec<f64> = (0..4).map(|i| score(m, i)).collect();
            let mut idx: Vec<usize> = (0..4).collect();
            idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
            (idx, s)
        };
        let (plain, ps) = rank(&lin);
        let (bent, _) = rank(&warped);
        // Near-ties can legitimately swap under rounding.
        let distinct = ps.iter().enumerate().all(|(i, a)| {
            ps.iter().skip(i + 1).all(|b| (a - b).abs() > 1e-9 * a.abs().max(1.0))
        });
        if distinct {
            prop_assert_eq!(plain, bent);
        }
    }
}
