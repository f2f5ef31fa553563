use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    argmax_class, fit_forest, fit_knn, fit_svm, ConvergenceStatus, FeatureImportances, KnnModel, KnnParams,
    LearnError, RandomForest, RandomForestParams, Result, SvmModel, SvmParams,
};
use crate::data::{CellClass, FeatureTable, Matrix, StandardizationParams};

/// Hyperparameters of one learner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(RandomForestParams),
    Knn(KnnParams),
    Svm(SvmParams),
    /// Always predicts the most frequent training class.
    Majority,
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::RandomForest(_) => "random_forest",
            ModelSpec::Knn(_) => "knn",
            ModelSpec::Svm(_) => "svm",
            ModelSpec::Majority => "majority",
        }
    }

    /// Distance- and kernel-based learners see z-scored inputs.
    pub fn standardizes(&self) -> bool {
        matches!(self, ModelSpec::Knn(_) | ModelSpec::Svm(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    RandomForest(RandomForest),
    Knn(KnnModel),
    Svm(SvmModel),
    Majority { class: CellClass },
}

/// A fitted learner together with the feature order and scaling it was
/// fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub features: Vec<String>,
    pub standardizer: Option<StandardizationParams>,
    pub classifier: Classifier,
}

/// Side products of fitting.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitInfo {
    pub importances: Option<FeatureImportances>,
    pub convergence: Option<ConvergenceStatus>,
}

pub fn fit_model(train: &FeatureTable, spec: &ModelSpec) -> Result<(TrainedModel, FitInfo)> {
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let (standardizer, table) = if spec.standardizes() {
        let s = StandardizationParams::fit(&train.x, &train.names)?;
        let x = s.transform(&train.x)?;
        (Some(s), FeatureTable { x, ..train.clone() })
    } else {
        (None, train.clone())
    };
    let mut info = FitInfo::default();
    let classifier = match spec {
        ModelSpec::RandomForest(p) => {
            let (forest, imp) = fit_forest(&table, p)?;
            info.importances = Some(imp);
            Classifier::RandomForest(forest)
        }
        ModelSpec::Knn(p) => Classifier::Knn(fit_knn(&table, p)?),
        ModelSpec::Svm(p) => {
            let m = fit_svm(&table, p)?;
            info.convergence = Some(m.status());
            Classifier::Svm(m)
        }
        ModelSpec::Majority => {
            let counts = table.class_counts();
            Classifier::Majority { class: argmax_class(&counts) }
        }
    };
    Ok((
        TrainedModel {
            schema_version: crate::SCHEMA_VERSION,
            features: train.names.clone(),
            standardizer,
            classifier,
        },
        info,
    ))
}

impl TrainedModel {
    fn predict_scaled_row(&self, row: &[f64]) -> CellClass {
        match &self.classifier {
            Classifier::RandomForest(f) => f.predict_row(row),
            Classifier::Knn(k) => k.predict_row(row),
            Classifier::Svm(s) => s.predict_row(row),
            Classifier::Majority { class } => *class,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<CellClass> {
        if row.len() != self.features.len() {
            return Err(LearnError::Dimension { expected: self.features.len(), found: row.len() });
        }
        Ok(match &self.standardizer {
            Some(s) => self.predict_scaled_row(&s.transform_row(row)),
            None => self.predict_scaled_row(row),
        })
    }

    /// Predicts every row of a batch, in order. Columns must follow the
    /// fitted feature order.
    pub fn predict(&self, batch: &Matrix) -> Result<Vec<CellClass>> {
        if batch.n_rows() > 0 && batch.n_cols() != self.features.len() {
            return Err(LearnError::Dimension { expected: self.features.len(), found: batch.n_cols() });
        }
        (0..batch.n_rows()).into_par_iter().map(|i| self.predict_row(batch.row(i))).collect()
    }

    /// Like [`predict`](Self::predict) but also checks feature names.
    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<CellClass>> {
        if table.names != self.features {
            return Err(LearnError::FeatureMismatch { expected: self.features.clone(), found: table.names.clone() });
        }
        self.predict(&table.x)
    }

    pub fn kind(&self) -> &'static str {
        match self.classifier {
            Classifier::RandomForest(_) => "random_forest",
            Classifier::Knn(_) => "knn",
            Classifier::Svm(_) => "svm",
            Classifier::Majority { .. } => "majority",
        }
    }
}

/// Batch prediction.
pub fn predict(m: &TrainedModel, batch: &Matrix) -> Result<Vec<CellClass>> {
    m.predict(batch)
}
