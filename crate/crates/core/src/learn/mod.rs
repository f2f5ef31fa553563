//! From-scratch classifiers: a Gini decision tree and its bagged forest,
//! k-nearest neighbours, and a one-vs-rest kernel SVM trained by SMO.

mod forest;
mod knn;
mod model;
mod svm;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{CellClass, DataError};

pub use forest::{fit_forest, tree_rng, RandomForest, RandomForestParams};
pub use knn::{fit_knn, KnnModel, KnnParams, Metric};
pub use model::{fit_model, predict, Classifier, FitInfo, ModelSpec, TrainedModel};
pub use svm::{
    dual_objective, fit_svm, solve_binary, BinarySolution, BinarySvm, ConvergenceStatus, Kernel,
    SvmModel, SvmParams,
};
pub use tree::{fit_tree, DecisionTree, FeaturesPerSplit, Node, SplitRule, TreeParams};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("training data contains a single class ({0}); at least two are required")]
    SingleClass(CellClass),
    #[error("dimension mismatch: model expects {expected} features, input has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("feature list mismatch: model expects {expected:?}, input has {found:?}")]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("k = {k} exceeds the training set size {n}")]
    KTooLarge { k: usize, n: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T> = std::result::Result<T, LearnError>;

/// Per-feature mean-decrease-in-impurity weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportances {
    pub features: Vec<String>,
    pub weights: Vec<f64>,
}

impl FeatureImportances {
    /// Features sorted by decreasing weight, ties by column order.
    pub fn ranked(&self) -> Vec<(String, f64)> {
        let mut v: Vec<(usize, f64)> = self.weights.iter().copied().enumerate().collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|(i, w)| (self.features[i].clone(), w)).collect()
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        self.features.iter().position(|f| f == feature).map(|i| self.weights[i])
    }
}

/// Argmax over class slots; ties go to the lowest ordinal.
pub(crate) fn argmax_class<T: PartialOrd + Copy>(scores: &[T; 3]) -> CellClass {
    let mut best = 0;
    for c in 1..3 {
        if scores[c] > scores[best] {
            best = c;
        }
    }
    CellClass::ALL[best]
}
