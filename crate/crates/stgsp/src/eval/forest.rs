//! Random forest: bagged binary CART trees with Gini splits.

use ndarray::Array2;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::LabeledDataset;

/// Forest hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees to purity.
    pub max_depth: Option<usize>,
    /// Minimum samples in each side of a split.
    pub min_leaf: usize,
    /// Random feature candidates per node; `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    /// Draw each tree's training set with replacement.
    pub bootstrap: bool,
    pub rng_seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: None,
            min_leaf: 1,
            features_per_split: None,
            bootstrap: true,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        /// Fraction of class-1 training samples that reached this leaf.
        p1: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Child for `value <= threshold`.
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn score(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { p1 } => return *p1,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// A trained forest.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<Tree>,
    n_features: usize,
}

impl RandomForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }
}

/// Deterministic per-tree seed derivation (splitmix64 step), so trees can
/// train in parallel without the schedule affecting the model.
fn tree_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e3779b97f4a7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

struct TreeBuilder<'a> {
    features: &'a Array2<f64>,
    labels: &'a [u8],
    mtry: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn build(&mut self, indices: Vec<usize>) -> usize {
        self.grow(indices, 0)
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let n = indices.len();
        let positives = indices.iter().filter(|&&i| self.labels[i] == 1).count();
        let p1 = positives as f64 / n as f64;

        let pure = positives == 0 || positives == n;
        let depth_done = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_done || n < 2 * self.min_leaf || n < 2 {
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf { p1 });
            return id;
        }

        match self.best_split(&indices) {
            None => {
                let id = self.nodes.len();
                self.nodes.push(Node::Leaf { p1 });
                id
            }
            Some((feature, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .into_iter()
                    .partition(|&i| self.features[[i, feature]] <= threshold);
                // placeholder, patched after children exist
                let id = self.nodes.len();
                self.nodes.push(Node::Leaf { p1 });
                let left = self.grow(left_idx, depth + 1);
                let right = self.grow(right_idx, depth + 1);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                id
            }
        }
    }

    /// Best Gini split over `mtry` sampled candidate features; thresholds
    /// are midpoints between consecutive distinct values. Ties keep the
    /// first candidate encountered (sample order, then ascending value).
    fn best_split(&mut self, indices: &[usize]) -> Option<(usize, f64)> {
        let d = self.features.ncols();
        // partial Fisher-Yates: the first `mtry` entries of a shuffled 0..d
        let mut pool: Vec<usize> = (0..d).collect();
        for slot in 0..self.mtry.min(d) {
            let pick = slot + self.rng.random_range(0..(d - slot));
            pool.swap(slot, pick);
        }

        let n = indices.len();
        let total_pos = indices.iter().filter(|&&i| self.labels[i] == 1).count();
        let mut best: Option<(f64, usize, f64)> = None; // (impurity, feature, threshold)

        let mut sorted: Vec<(f64, u8)> = Vec::with_capacity(n);
        for &feature in pool.iter().take(self.mtry.min(d)) {
            sorted.clear();
            sorted.extend(
                indices
                    .iter()
                    .map(|&i| (self.features[[i, feature]], self.labels[i])),
            );
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_n = 0usize;
            let mut left_pos = 0usize;
            for cut in 0..n - 1 {
                left_n += 1;
                left_pos += usize::from(sorted[cut].1 == 1);
                if sorted[cut].0 == sorted[cut + 1].0 {
                    continue; // no threshold separates equal values
                }
                let right_n = n - left_n;
                if left_n < self.min_leaf || right_n < self.min_leaf {
                    continue;
                }
                let right_pos = total_pos - left_pos;
                let gini = |count: usize, pos: usize| -> f64 {
                    let p = pos as f64 / count as f64;
                    2.0 * p * (1.0 - p)
                };
                let impurity = (left_n as f64 * gini(left_n, left_pos)
                    + right_n as f64 * gini(right_n, right_pos))
                    / n as f64;
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let threshold = 0.5 * (sorted[cut].0 + sorted[cut + 1].0);
                    best = Some((impurity, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

/// Trains a bagged forest of Gini-split decision trees. Deterministic given
/// the dataset and config; trees are trained in parallel with per-tree
/// derived seeds.
pub fn train_forest(train: &LabeledDataset, cfg: &ForestConfig) -> Result<RandomForest> {
    let n = train.len();
    let d = train.features.ncols();
    if n == 0 {
        return Err(Error::Value("training set is empty".to_string()));
    }
    let positives = train.labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::Value(
            "training set must contain both classes".to_string(),
        ));
    }
    if cfg.n_trees == 0 {
        return Err(Error::Value("n_trees must be positive".to_string()));
    }
    if cfg.min_leaf == 0 {
        return Err(Error::Value("min_leaf must be positive".to_string()));
    }
    let mtry = match cfg.features_per_split {
        Some(m) if m == 0 || m > d => {
            return Err(Error::Value(format!(
                "features_per_split {m} must be in 1..={d}"
            )))
        }
        Some(m) => m,
        None => (d as f64).sqrt().ceil() as usize,
    };

    let trees: Vec<Tree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(cfg.rng_seed, t as u64));
            let indices: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                features: &train.features,
                labels: &train.labels,
                mtry,
                max_depth: cfg.max_depth,
                min_leaf: cfg.min_leaf,
                rng,
                nodes: Vec::new(),
            };
            builder.build(indices);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(RandomForest {
        trees,
        n_features: d,
    })
}

/// Mean over trees of the leaf class-1 fraction; one score in `[0, 1]` per
/// row.
pub fn predict_scores(model: &RandomForest, features: &Array2<f64>) -> Result<Vec<f64>> {
    if features.ncols() != model.n_features {
        return Err(Error::Dimension(format!(
            "feature count {} does not match the trained model's {}",
            features.ncols(),
            model.n_features
        )));
    }
    let inv = 1.0 / model.trees.len() as f64;
    Ok(features
        .rows()
        .into_iter()
        .map(|row| {
            let row: Vec<f64> = row.to_vec();
            model.trees.iter().map(|t| t.score(&row)).sum::<f64>() * inv
        })
        .collect())
}
