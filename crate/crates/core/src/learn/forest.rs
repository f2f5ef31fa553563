use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, FeaturesPerSplit, TreeParams};
use super::{argmax_class, FeatureImportances, LearnError, Result};
use crate::data::{CellClass, FeatureTable};
use crate::rng::{self, Rng};

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomForestParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    #[serde(default)]
    pub features_per_split: FeaturesPerSplit,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            n_estimators: 100,
            max_depth: 10,
            features_per_split: FeaturesPerSplit::default(),
            bootstrap: true,
            seed: 0,
        }
    }
}

impl RandomForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(LearnError::InvalidParams("n_estimators must be >= 1".into()));
        }
        self.tree_params().validate()
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams { max_depth: self.max_depth, features_per_split: self.features_per_split }
    }
}

/// RNG stream of tree `index` in a forest seeded with `seed`.
pub fn tree_rng(seed: u64, index: usize) -> Rng {
    rng::seeded(seed, rng::stream::TREES + index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Votes per class slot for one row.
    pub fn votes(&self, row: &[f64]) -> [u32; 3] {
        let mut v = [0u32; 3];
        for t in &self.trees {
            v[t.predict_row(row).index()] += 1;
        }
        v
    }

    pub fn tree_predictions(&self, row: &[f64]) -> Vec<CellClass> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }

    /// Majority vote; ties go to the lowest class ordinal.
    pub fn predict_row(&self, row: &[f64]) -> CellClass {
        argmax_class(&self.votes(row))
    }

    /// Mean decrease in impurity, per-tree normalized, averaged over trees
    /// that split at least once, then renormalized. All zeros when no tree
    /// ever split.
    pub fn importances(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        let mut used = 0usize;
        for t in &self.trees {
            let total: f64 = t.impurity_decrease.iter().sum();
            if total > 0.0 {
                used += 1;
                for (a, d) in acc.iter_mut().zip(&t.impurity_decrease) {
                    *a += d / total;
                }
            }
        }
        if used == 0 {
            return acc;
        }
        let sum: f64 = acc.iter().sum();
        acc.iter().map(|a| a / sum).collect()
    }
}

/// Fits a bagged forest. Tree `i` uses `tree_rng(seed, i)` for both its
/// bootstrap draw and its feature sampling, so the result does not depend on
/// how many worker threads build the trees.
pub fn fit_forest(train: &FeatureTable, p: &RandomForestParams) -> Result<(RandomForest, FeatureImportances)> {
    p.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let missing: Vec<_> = CellClass::ALL.iter().filter(|c| train.class_counts()[c.index()] == 0).collect();
    if !missing.is_empty() {
        log::warn!("random forest training data has no rows for class(es) {missing:?}");
    }
    let n = train.len();
    let tp = p.tree_params();
    let trees = (0..p.n_estimators)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_rng(p.seed, i);
            let sample: Vec<usize> = if p.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            DecisionTree::fit_on_sample(&train.x, &train.y, &sample, &tp, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let forest = RandomForest { n_features: train.x.n_cols(), trees };
    let imp = FeatureImportances { features: train.names.clone(), weights: forest.importances() };
    Ok((forest, imp))
}
