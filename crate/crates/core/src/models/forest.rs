//! Random forest regression built from CART trees.
//!
//! Each tree is grown on a bootstrap sample (or the full data) by choosing,
//! at every node, the split that minimizes the weighted variance of the two
//! children. Split ties go to the lowest feature index, then the lowest
//! threshold. Trees are seeded independently, so fitting in parallel gives
//! the same forest as fitting sequentially.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::tree_stream;

use super::{Batch, RegressionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            max_features: MaxFeatures::All,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    fn validate(&self, p: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("forest needs at least one tree".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig("min_samples_split must be at least 2".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if let MaxFeatures::Count(k) = self.max_features {
            if k == 0 || k > p {
                return Err(Error::InvalidConfig(format!(
                    "max_features must be in 1..={p}, got {k}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A fitted regression tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Adds this tree's prediction at each grid value of `feature` to `acc`.
    /// `grid` must be ascending.
    fn accumulate_sweep(&self, node: usize, base: &[f64], feature: usize, grid: &[f64], acc: &mut [f64]) {
        match self.nodes[node] {
            Node::Leaf(v) => acc.iter_mut().for_each(|a| *a += v),
            Node::Split {
                feature: f,
                threshold,
                left,
                right,
            } if f == feature => {
                let k = grid.partition_point(|&x| x <= threshold);
                let (gl, gr) = grid.split_at(k);
                let (al, ar) = acc.split_at_mut(k);
                if !gl.is_empty() {
                    self.accumulate_sweep(left, base, feature, gl, al);
                }
                if !gr.is_empty() {
                    self.accumulate_sweep(right, base, feature, gr, ar);
                }
            }
            Node::Split {
                feature: f,
                threshold,
                left,
                right,
            } => {
                let next = if base[f] <= threshold { left } else { right };
                self.accumulate_sweep(next, base, feature, grid, acc);
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<Tree>,
    params: ForestParams,
    seed: u64,
    p: usize,
}

impl ForestModel {
    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        // same summation order as the sweep path
        let sum = self.trees.iter().fold(0.0, |acc, t| acc + t.predict_row(row));
        sum / self.trees.len() as f64
    }
}

impl RegressionModel for ForestModel {
    fn n_features(&self) -> usize {
        self.p
    }

    fn predict_batch(&self, batch: Batch<'_>) -> Result<Vec<f64>> {
        Ok(batch.rows().map(|row| self.predict_row(row)).collect())
    }

    /// Walks each tree once for the whole grid instead of once per grid
    /// value. Per grid value the tree outputs are summed in tree order, so
    /// the result is bit-identical to `predict_row`.
    fn predict_sweep(&self, base: &[f64], feature: usize, grid: &[f64]) -> Result<Vec<f64>> {
        if !grid.windows(2).all(|w| w[0] <= w[1]) {
            let rows: Vec<f64> = grid
                .iter()
                .flat_map(|&v| {
                    let mut r = base.to_vec();
                    r[feature] = v;
                    r
                })
                .collect();
            return self.predict_batch(Batch::new(&rows, self.p)?);
        }
        let mut acc = vec![0.0; grid.len()];
        for tree in &self.trees {
            tree.accumulate_sweep(0, base, feature, grid, &mut acc);
        }
        let n = self.trees.len() as f64;
        Ok(acc.into_iter().map(|s| s / n).collect())
    }

    fn describe(&self) -> String {
        format!(
            "random-forest(trees={}, max_depth={}, min_samples_split={}, max_features={}, bootstrap={}, seed={})",
            self.params.n_trees,
            self.params.max_depth.map_or("none".to_string(), |d| d.to_string()),
            self.params.min_samples_split,
            match self.params.max_features {
                MaxFeatures::All => "all".to_string(),
                MaxFeatures::Count(k) => k.to_string(),
            },
            self.params.bootstrap,
            self.seed
        )
    }
}

/// Fits a forest on `ds` and its response. Trees are fitted in parallel on
/// the current rayon pool.
pub fn fit_random_forest(ds: &Dataset, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    let y = ds
        .response()
        .ok_or_else(|| Error::InvalidDataset("random forest needs a response column".into()))?;
    let p = ds.n_predictors();
    params.validate(p)?;
    let trees = (0..params.n_trees as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_stream(seed, t);
            let n = ds.n_rows();
            let samples: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            TreeBuilder {
                x: ds.values(),
                y,
                p,
                params,
                rng,
                nodes: Vec::new(),
            }
            .build(samples)
        })
        .collect();
    Ok(ForestModel {
        trees,
        params: params.clone(),
        seed,
        p,
    })
}

struct TreeBuilder<'a> {
    x: &'a [f64],
    y: &'a [f64],
    p: usize,
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl TreeBuilder<'_> {
    fn build(mut self, samples: Vec<usize>) -> Tree {
        self.grow(samples, 0);
        Tree { nodes: self.nodes }
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = samples.iter().map(|&s| self.y[s]).sum::<f64>() / samples.len() as f64;
        self.nodes.push(Node::Leaf(mean));

        let first = self.y[samples[0]];
        let pure = samples.iter().all(|&s| self.y[s] == first);
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || samples.len() < self.params.min_samples_split {
            return id;
        }
        let Some(best) = self.best_split(&samples, mean) else {
            return id;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.x[s * self.p + best.feature] <= best.threshold);
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match self.params.max_features {
            MaxFeatures::All => (0..self.p).collect(),
            MaxFeatures::Count(k) if k >= self.p => (0..self.p).collect(),
            MaxFeatures::Count(k) => {
                let mut f = sample(&mut self.rng, self.p, k).into_vec();
                f.sort_unstable();
                f
            }
        }
    }

    /// Maximizes `S_l^2 / n_l + S_r^2 / n_r` over centered targets, which is
    /// equivalent to minimizing the summed child squared error.
    fn best_split(&mut self, samples: &[usize], mean: f64) -> Option<BestSplit> {
        let features = self.candidate_features();
        let m = samples.len();
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);
        for f in features {
            pairs.clear();
            pairs.extend(samples.iter().map(|&s| (self.x[s * self.p + f], self.y[s] - mean)));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

            let total: f64 = pairs.iter().map(|p| p.1).sum();
            let mut left_sum = 0.0;
            for i in 0..m - 1 {
                left_sum += pairs[i].1;
                let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
                if lo == hi {
                    continue;
                }
                let nl = (i + 1) as f64;
                let nr = (m - i - 1) as f64;
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}
