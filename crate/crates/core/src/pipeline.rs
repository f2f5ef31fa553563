//! Feature derivation, importance ranking, threshold selection and the
//! end-to-end train/evaluate run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{self, CellClass, DataError, Dataset, FeatureTable, Matrix, SplitSpec};
use crate::eval::{self, CvResult, EvalError, EvaluationReport, LearningCurve};
use crate::learn::{
    fit_forest, fit_model, ConvergenceStatus, FeatureImportances, LearnError, ModelSpec, RandomForestParams,
    TrainedModel,
};
use crate::physics;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("every record was excluded during featurization ({0} excluded)")]
    AllExcluded(usize),
    #[error("no feature has importance above {threshold}")]
    EmptySelection { threshold: f64 },
    #[error("invalid importance threshold {0}; must lie in [0, 1)")]
    InvalidThreshold(f64),
    #[error("duplicate or empty feature list")]
    InvalidFeatures,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Stable identifiers of the six model inputs, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureId {
    #[serde(rename = "frequency_hz")]
    Frequency,
    #[serde(rename = "conductivity_s_per_m")]
    Conductivity,
    #[serde(rename = "relative_permittivity")]
    RelPermittivity,
    ImagPermittivity,
    LossTangent,
    #[serde(rename = "relaxation_time_s")]
    RelaxationTime,
}

impl FeatureId {
    pub const ALL: [FeatureId; 6] = [
        FeatureId::Frequency,
        FeatureId::Conductivity,
        FeatureId::RelPermittivity,
        FeatureId::ImagPermittivity,
        FeatureId::LossTangent,
        FeatureId::RelaxationTime,
    ];

    pub const PRIMARY: [FeatureId; 3] = [FeatureId::Frequency, FeatureId::Conductivity, FeatureId::RelPermittivity];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureId::Frequency => "frequency_hz",
            FeatureId::Conductivity => "conductivity_s_per_m",
            FeatureId::RelPermittivity => "relative_permittivity",
            FeatureId::ImagPermittivity => "imag_permittivity",
            FeatureId::LossTangent => "loss_tangent",
            FeatureId::RelaxationTime => "relaxation_time_s",
        }
    }

    pub fn is_derived(self) -> bool {
        !FeatureId::PRIMARY.contains(&self)
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FeatureId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown feature `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Requested columns; emitted in canonical order regardless of the
    /// order given here.
    #[serde(default = "all_features")]
    pub features: Vec<FeatureId>,
    /// Replace the frequency column by its base-10 logarithm.
    #[serde(default)]
    pub log_frequency: bool,
}

fn all_features() -> Vec<FeatureId> {
    FeatureId::ALL.to_vec()
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { features: all_features(), log_frequency: false }
    }
}

impl FeatureConfig {
    pub fn primary_only() -> Self {
        FeatureConfig { features: FeatureId::PRIMARY.to_vec(), log_frequency: false }
    }

    /// Requested features, deduplicated and in canonical order.
    pub fn columns(&self) -> Result<Vec<FeatureId>> {
        let cols: Vec<FeatureId> = FeatureId::ALL.into_iter().filter(|f| self.features.contains(f)).collect();
        if cols.is_empty() || cols.len() != self.features.len() {
            return Err(PipelineError::InvalidFeatures);
        }
        Ok(cols)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    /// Row index in the input dataset.
    pub row: usize,
    pub source_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Featurized {
    pub table: FeatureTable,
    /// Input row index of each table row.
    pub rows: Vec<usize>,
    pub excluded: Vec<Exclusion>,
}

fn feature_value(id: FeatureId, r: &data::SpectralRecord, log_frequency: bool) -> physics::Result<f64> {
    let (f, s, e) = (r.frequency, r.conductivity, r.rel_permittivity);
    match id {
        FeatureId::Frequency if log_frequency => Ok(f.log10()),
        FeatureId::Frequency => Ok(f),
        FeatureId::Conductivity => Ok(s),
        FeatureId::RelPermittivity => Ok(e),
        FeatureId::ImagPermittivity => physics::imaginary_permittivity(s, f),
        FeatureId::LossTangent => physics::loss_tangent(s, e, f),
        FeatureId::RelaxationTime => physics::charge_relaxation_time(s, e),
    }
}

/// Builds the feature matrix. Records whose derived columns cannot be
/// computed are dropped and listed in `excluded`; row order is kept.
pub fn featurize(d: &Dataset, config: &FeatureConfig) -> Result<Featurized> {
    let cols = config.columns()?;
    let mut data = Vec::with_capacity(d.len() * cols.len());
    let mut y = Vec::with_capacity(d.len());
    let mut rows = Vec::with_capacity(d.len());
    let mut excluded = Vec::new();
    let mut row = Vec::with_capacity(cols.len());
    for (i, r) in d.records.iter().enumerate() {
        row.clear();
        let outcome = cols.iter().try_for_each(|&id| {
            let v = feature_value(id, r, config.log_frequency).map_err(|e| format!("{id}: {e}"))?;
            if v.is_finite() {
                row.push(v);
                Ok(())
            } else {
                Err(format!("{id}: non-finite value {v}"))
            }
        });
        match outcome {
            Ok(()) => {
                data.extend_from_slice(&row);
                y.push(r.label);
                rows.push(i);
            }
            Err(reason) => excluded.push(Exclusion { row: i, source_id: r.source_id.clone(), reason }),
        }
    }
    if y.is_empty() {
        return Err(PipelineError::AllExcluded(excluded.len()));
    }
    for e in &excluded {
        log::warn!("excluded row {} ({}): {}", e.row, e.source_id, e.reason);
    }
    let names = cols.iter().map(|c| c.as_str().to_string()).collect();
    let x = Matrix::from_vec(y.len(), cols.len(), data)?;
    Ok(Featurized { table: FeatureTable::new(names, x, y)?, rows, excluded })
}

/// Random-forest mean-decrease-in-impurity ranking, fitted on `train` only.
pub fn rank_features(train: &FeatureTable, p: &RandomForestParams) -> Result<FeatureImportances> {
    Ok(fit_forest(train, p)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    /// Features with importance strictly above this value are kept.
    pub importance_threshold: f64,
}

impl Default for SelectionSpec {
    fn default() -> Self {
        SelectionSpec { importance_threshold: 0.1 }
    }
}

impl SelectionSpec {
    pub fn validate(&self) -> Result<()> {
        let t = self.importance_threshold;
        if !(0.0..1.0).contains(&t) {
            return Err(PipelineError::InvalidThreshold(t));
        }
        Ok(())
    }

    /// Names of retained features, in their original column order. A zero
    /// threshold keeps every feature, including ones with zero weight.
    pub fn retain(&self, imp: &FeatureImportances) -> Result<Vec<String>> {
        self.validate()?;
        let t = self.importance_threshold;
        let kept: Vec<String> = imp
            .features
            .iter()
            .zip(&imp.weights)
            .filter(|&(_, &w)| t == 0.0 || w > t)
            .map(|(f, _)| f.clone())
            .collect();
        if kept.is_empty() {
            return Err(PipelineError::EmptySelection { threshold: t });
        }
        Ok(kept)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub importances: FeatureImportances,
    pub retained: Vec<String>,
    pub model: TrainedModel,
    pub evaluation: EvaluationReport,
}

fn column_indices(table: &FeatureTable, names: &[String]) -> Vec<usize> {
    names.iter().map(|n| table.names.iter().position(|m| m == n).expect("retained name comes from table")).collect()
}

/// Ranks on `train`, keeps features above the threshold, refits the same
/// forest on the reduced columns and evaluates on `test`.
pub fn select_and_retrain(
    train: &FeatureTable,
    test: &FeatureTable,
    s: &SelectionSpec,
    p: &RandomForestParams,
) -> Result<Selection> {
    let importances = rank_features(train, p)?;
    let retained = s.retain(&importances)?;
    let cols = column_indices(train, &retained);
    let (model, _) = fit_model(&train.with_columns(&cols), &ModelSpec::RandomForest(*p))?;
    let evaluation = eval::evaluate(&model, &test.with_columns(&cols))?;
    Ok(Selection { importances, retained, model, evaluation })
}

fn default_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveSpec {
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Number of evenly spaced training sizes.
    pub steps: usize,
    /// Smallest size as a fraction of the fold training portion.
    pub min_fraction: f64,
}

impl Default for LearningCurveSpec {
    fn default() -> Self {
        LearningCurveSpec { folds: 5, steps: 5, min_fraction: 0.1 }
    }
}

/// One complete run description: what to featurize, how to split, which
/// model to fit, and optional selection and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub split: SplitSpec,
    pub model: ModelSpec,
    /// Threshold selection; the model must then be a random forest.
    #[serde(default)]
    pub selection: Option<SelectionSpec>,
    #[serde(default)]
    pub learning_curve: Option<LearningCurveSpec>,
    /// Stratified k-fold cross-validation on the training split.
    #[serde(default)]
    pub cv_folds: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: crate::SCHEMA_VERSION,
            features: FeatureConfig::default(),
            split: SplitSpec::default(),
            model: ModelSpec::RandomForest(RandomForestParams::default()),
            selection: None,
            learning_curve: None,
            cv_folds: None,
        }
    }
}

impl PipelineConfig {
    /// Overrides every seed in the configuration.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split.seed = seed;
        if let ModelSpec::RandomForest(p) = &mut self.model {
            p.seed = seed;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.features.columns()?;
        if let Some(s) = &self.selection {
            s.validate()?;
            if !matches!(self.model, ModelSpec::RandomForest(_)) {
                return Err(PipelineError::Learn(LearnError::InvalidParams(
                    "feature selection requires a random_forest model".into(),
                )));
            }
        }
        Ok(())
    }
}

/// Deterministic summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    pub model_kind: String,
    pub features: Vec<String>,
    pub retained_features: Vec<String>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub evaluation: EvaluationReport,
    pub train_accuracy: f64,
    /// Full-feature test evaluation when selection was applied.
    pub full_feature_evaluation: Option<EvaluationReport>,
    pub importances: Option<FeatureImportances>,
    pub convergence: Option<ConvergenceStatus>,
    pub cross_validation: Option<CvResult>,
    pub learning_curve: Option<LearningCurve>,
    pub excluded: Vec<Exclusion>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub model: TrainedModel,
    pub report: RunReport,
}

/// featurize → split → (rank → select) → fit → evaluate.
pub fn run(d: &Dataset, cfg: &PipelineConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let feats = featurize(d, &cfg.features)?;
    let (tr, te) = data::split_indices(&feats.table.y, &cfg.split)?;
    let train = feats.table.subset(&tr);
    let test = feats.table.subset(&te);
    let counts = train.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        let only = CellClass::ALL.into_iter().find(|c| counts[c.index()] > 0).ok_or(LearnError::EmptyTrainingSet)?;
        return Err(LearnError::SingleClass(only).into());
    }

    let (full_model, info) = fit_model(&train, &cfg.model)?;
    let full_eval = eval::evaluate(&full_model, &test)?;

    let (model, evaluation, retained, importances, full_feature_evaluation, reduced_train) = match (&cfg.selection, &cfg.model)
    {
        (Some(s), ModelSpec::RandomForest(p)) => {
            let sel = select_and_retrain(&train, &test, s, p)?;
            let cols = column_indices(&train, &sel.retained);
            (sel.model, sel.evaluation, sel.retained, Some(sel.importances), Some(full_eval), train.with_columns(&cols))
        }
        _ => (full_model, full_eval, train.names.clone(), info.importances, None, train.clone()),
    };
    let train_accuracy = eval::evaluate(&model, &reduced_train)?.accuracy;

    let cross_validation = match cfg.cv_folds {
        Some(k) => Some(eval::cross_validate(&reduced_train, &cfg.model, k, cfg.split.seed)?),
        None => None,
    };
    let learning_curve = match &cfg.learning_curve {
        Some(lc) => {
            let sizes = eval::size_grid(reduced_train.len(), lc.folds, lc.steps, lc.min_fraction);
            Some(eval::learning_curve(&reduced_train, &cfg.model, &sizes, lc.folds, cfg.split.seed)?)
        }
        None => None,
    };

    let report = RunReport {
        schema_version: crate::SCHEMA_VERSION,
        model_kind: cfg.model.kind().to_string(),
        features: train.names.clone(),
        retained_features: retained,
        train_rows: train.len(),
        test_rows: test.len(),
        evaluation,
        train_accuracy,
        full_feature_evaluation,
        importances,
        convergence: info.convergence,
        cross_validation,
        learning_curve,
        excluded: feats.excluded,
    };
    Ok(RunOutput { model, report })
}

/// Class counts of a featurized table, for logging.
pub fn describe(t: &FeatureTable) -> String {
    let c = t.class_counts();
    CellClass::ALL.iter().map(|k| format!("{}={}", k.roman(), c[k.index()])).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SpectralRecord;

    fn record(f: f64, s: f64, e: f64, label: CellClass) -> SpectralRecord {
        SpectralRecord {
            frequency: f,
            conductivity: s,
            rel_permittivity: e,
            reported_tau: None,
            label,
            source_id: "t".into(),
        }
    }

    #[test]
    fn worked_example() {
        let d = Dataset::new(vec![record(1e6, 0.5, 59.15, CellClass::Malignant)], "t");
        let t = featurize(&d, &FeatureConfig::default()).unwrap().table;
        let row = t.x.row(0);
        assert_eq!(t.names[3], "imag_permittivity");
        assert!((row[3] - 8987.6).abs() / 8987.6 < 1e-4, "{}", row[3]);
        assert!((row[4] - 151.95).abs() / 151.95 < 1e-4, "{}", row[4]);
        assert!((row[5] - 1.0475e-9).abs() / 1.0475e-9 < 1e-4, "{}", row[5]);
        assert_eq!(row[5], 8.8541878128e-12 * 59.15 / 0.5);
    }

    #[test]
    fn zero_conductivity_excluded_with_reason() {
        let d = Dataset::new(
            vec![record(1e6, 0.0, 10.0, CellClass::Normal), record(1e6, 0.1, 10.0, CellClass::Benign)],
            "t",
        );
        let f = featurize(&d, &FeatureConfig::default()).unwrap();
        assert_eq!(f.table.len(), 1);
        assert_eq!(f.rows, vec![1]);
        assert_eq!(f.excluded.len(), 1);
        assert!(f.excluded[0].reason.starts_with("relaxation_time_s"));

        // without the relaxation time the record survives
        let cfg = FeatureConfig { features: FeatureId::ALL[..5].to_vec(), log_frequency: false };
        assert_eq!(featurize(&d, &cfg).unwrap().table.len(), 2);

        let only_bad = Dataset::new(vec![record(1e6, 0.0, 10.0, CellClass::Normal)], "t");
        assert!(matches!(featurize(&only_bad, &FeatureConfig::default()), Err(PipelineError::AllExcluded(1))));
    }

    #[test]
    fn primary_only_and_log_frequency() {
        let d = Dataset::new(vec![record(1e6, 0.5, 59.15, CellClass::Malignant)], "t");
        let t = featurize(&d, &FeatureConfig::primary_only()).unwrap().table;
        assert_eq!(t.x.row(0), &[1e6, 0.5, 59.15]);
        let cfg = FeatureConfig { log_frequency: true, ..FeatureConfig::primary_only() };
        assert_eq!(featurize(&d, &cfg).unwrap().table.x.get(0, 0), 6.0);
    }

    #[test]
    fn canonical_order_and_bad_lists() {
        let cfg = FeatureConfig {
            features: vec![FeatureId::LossTangent, FeatureId::Frequency],
            log_frequency: false,
        };
        assert_eq!(cfg.columns().unwrap(), vec![FeatureId::Frequency, FeatureId::LossTangent]);
        let dup = FeatureConfig { features: vec![FeatureId::Frequency, FeatureId::Frequency], log_frequency: false };
        assert!(dup.columns().is_err());
        assert!(FeatureConfig { features: vec![], log_frequency: false }.columns().is_err());
    }

    #[test]
    fn feature_id_strings_round_trip() {
        for id in FeatureId::ALL {
            assert_eq!(id.as_str().parse::<FeatureId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
        }
    }

    #[test]
    fn threshold_rules() {
        let imp = FeatureImportances {
            features: vec!["a".into(), "b".into(), "c".into()],
            weights: vec![0.6, 0.4, 0.0],
        };
        let r = |t| SelectionSpec { importance_threshold: t }.retain(&imp);
        assert_eq!(r(0.0).unwrap().len(), 3);
        assert_eq!(r(0.005).unwrap(), vec!["a", "b"]);
        assert_eq!(r(0.5).unwrap(), vec!["a"]);
        assert!(matches!(r(0.99), Err(PipelineError::EmptySelection { .. })));
        assert!(matches!(r(1.0), Err(PipelineError::InvalidThreshold(_))));
        assert!(matches!(r(-0.1), Err(PipelineError::InvalidThreshold(_))));
    }
}
