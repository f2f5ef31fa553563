//! Confusion matrices, per-class and averaged metrics, stratified k-fold
//! cross-validation and learning curves.

use std::io::Write;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{CellClass, FeatureTable};
use crate::learn::{fit_model, LearnError, ModelSpec, TrainedModel};
use crate::rng;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label vectors differ in length: {truth} true vs {predicted} predicted")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("class {class} has {count} member(s), fewer than the {folds} folds requested")]
    InsufficientClass { class: CellClass, count: usize, folds: usize },
    #[error("invalid fold count {0}; need at least 2")]
    InvalidFolds(usize),
    #[error("invalid learning-curve grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// 3×3 counts; rows are the true class, columns the predicted class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|c| self.counts[c][c]).sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        (0..3).map(|r| self.counts[r][c]).sum()
    }

    pub fn get(&self, truth: CellClass, predicted: CellClass) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    /// F1 of class `c` as an exact fraction `2tp / (2tp + fp + fn)`;
    /// `None` when the class never occurs in truth or predictions.
    pub fn f1_fraction(&self, c: usize) -> Option<(u64, u64)> {
        let tp = self.counts[c][c];
        let den = self.row_sum(c) + self.col_sum(c);
        (den > 0).then_some((2 * tp, den))
    }

    /// Relabels classes: class `i` becomes class `perm[i]`.
    pub fn permuted(&self, perm: [usize; 3]) -> ConfusionMatrix {
        let mut out = ConfusionMatrix::default();
        for r in 0..3 {
            for c in 0..3 {
                out.counts[perm[r]][perm[c]] = self.counts[r][c];
            }
        }
        out
    }
}

pub fn confusion(truth: &[CellClass], predicted: &[CellClass]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch { truth: truth.len(), predicted: predicted.len() });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: CellClass,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// No predictions of this class: precision reported as 0.
    pub precision_undefined: bool,
    /// No true members of this class: recall reported as 0.
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    /// Unweighted mean over the three classes.
    pub macro_avg: Averages,
    /// Support-weighted mean.
    pub weighted_avg: Averages,
    pub accuracy: f64,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn report(cm: &ConfusionMatrix) -> Result<EvaluationReport> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let per_class: Vec<ClassMetrics> = CellClass::ALL
        .iter()
        .map(|&class| {
            let c = class.index();
            let tp = cm.counts[c][c];
            let (precision, precision_undefined) = ratio(tp, cm.col_sum(c));
            let (recall, recall_undefined) = ratio(tp, cm.row_sum(c));
            let f1 = cm.f1_fraction(c).map(|(n, d)| n as f64 / d as f64).unwrap_or(0.0);
            ClassMetrics { class, precision, recall, f1, support: cm.row_sum(c), precision_undefined, recall_undefined }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / 3.0;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        per_class.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
    };
    Ok(EvaluationReport {
        confusion: *cm,
        macro_avg: Averages { precision: mean(|m| m.precision), recall: mean(|m| m.recall), f1: mean(|m| m.f1) },
        weighted_avg: Averages {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
        },
        accuracy: cm.trace() as f64 / total as f64,
        total,
        per_class,
    })
}

/// Confusion matrix and report of a fitted model on a labelled table.
pub fn evaluate(model: &TrainedModel, table: &FeatureTable) -> Result<EvaluationReport> {
    let pred = model.predict_table(table)?;
    report(&confusion(&table.y, &pred)?)
}

pub fn accuracy(truth: &[CellClass], predicted: &[CellClass]) -> Result<f64> {
    Ok(report(&confusion(truth, predicted)?)?.accuracy)
}

/// One fold of a stratified partition. `train` is already shuffled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k-fold plan. Each class is shuffled and dealt round-robin, the
/// dealing offset carrying over between classes so fold sizes stay within
/// one of each other. Training index lists are shuffled with a per-fold
/// stream.
pub fn stratified_folds(labels: &[CellClass], folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if folds < 2 {
        return Err(EvalError::InvalidFolds(folds));
    }
    let counts = crate::data::class_counts(labels.iter().copied());
    for class in CellClass::ALL {
        let n = counts[class.index()];
        if n > 0 && n < folds {
            return Err(EvalError::InsufficientClass { class, count: n, folds });
        }
    }
    let mut rng = rng::seeded(seed, rng::stream::FOLDS);
    let mut assignment = vec![0usize; labels.len()];
    let mut offset = 0;
    for class in CellClass::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (k, &i) in members.iter().enumerate() {
            assignment[i] = (offset + k) % folds;
        }
        offset = (offset + members.len()) % folds;
    }
    Ok((0..folds)
        .map(|f| {
            let validation: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == f).collect();
            let mut train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != f).collect();
            train.shuffle(&mut rng::seeded(seed, rng::stream::LEARNING_CURVE + ((f as u64 + 1) << 8)));
            Fold { train, validation }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub fold_accuracy: Vec<f64>,
    pub fold_macro_f1: Vec<f64>,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Stratified k-fold cross-validation. Folds run in parallel; results are
/// kept in fold order.
pub fn cross_validate(data: &FeatureTable, spec: &ModelSpec, folds: usize, seed: u64) -> Result<CvResult> {
    let plan = stratified_folds(&data.y, folds, seed)?;
    let scores = plan
        .par_iter()
        .map(|f| {
            let (model, _) = fit_model(&data.subset(&f.train), spec)?;
            let r = evaluate(&model, &data.subset(&f.validation))?;
            Ok((r.accuracy, r.macro_avg.f1))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold_accuracy: Vec<f64> = scores.iter().map(|s| s.0).collect();
    let fold_macro_f1: Vec<f64> = scores.iter().map(|s| s.1).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracy);
    let (mean_macro_f1, std_macro_f1) = mean_std(&fold_macro_f1);
    Ok(CvResult { fold_accuracy, fold_macro_f1, mean_accuracy, std_accuracy, mean_macro_f1, std_macro_f1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub train_size: usize,
    pub train_mean: f64,
    pub train_std: f64,
    pub validation_mean: f64,
    pub validation_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub folds: usize,
    pub points: Vec<CurvePoint>,
}

/// Evenly spaced training sizes from `fraction_min` to 1 of the smallest
/// fold training portion.
pub fn size_grid(data_len: usize, folds: usize, steps: usize, fraction_min: f64) -> Vec<usize> {
    let max = data_len - data_len.div_ceil(folds);
    let mut out: Vec<usize> = (0..steps)
        .map(|s| {
            let f = if steps == 1 { 1.0 } else { fraction_min + (1.0 - fraction_min) * s as f64 / (steps - 1) as f64 };
            ((max as f64 * f).round() as usize).clamp(1, max)
        })
        .collect();
    out.dedup();
    out
}

/// For each size, fits on the first `size` rows of each fold's shuffled
/// training portion and scores accuracy on that subset and on the fold's
/// validation rows.
pub fn learning_curve(
    data: &FeatureTable,
    spec: &ModelSpec,
    sizes: &[usize],
    folds: usize,
    seed: u64,
) -> Result<LearningCurve> {
    let plan = stratified_folds(&data.y, folds, seed)?;
    let max = plan.iter().map(|f| f.train.len()).min().unwrap_or(0);
    if sizes.is_empty() {
        return Err(EvalError::InvalidGrid("empty size grid".into()));
    }
    if sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvalError::InvalidGrid("sizes must be strictly increasing".into()));
    }
    if sizes[0] == 0 || *sizes.last().unwrap() > max {
        return Err(EvalError::InvalidGrid(format!("sizes must lie in [1, {max}]")));
    }
    let jobs: Vec<(usize, usize)> = sizes.iter().flat_map(|&s| (0..plan.len()).map(move |f| (s, f))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(size, f)| {
            let fold = &plan[f];
            let train = data.subset(&fold.train[..size]);
            let (model, _) = fit_model(&train, spec)?;
            let tr = evaluate(&model, &train)?.accuracy;
            let va = evaluate(&model, &data.subset(&fold.validation))?.accuracy;
            Ok((tr, va))
        })
        .collect::<Result<Vec<_>>>()?;
    let points = sizes
        .iter()
        .enumerate()
        .map(|(si, &train_size)| {
            let chunk = &scores[si * plan.len()..(si + 1) * plan.len()];
            let (train_mean, train_std) = mean_std(&chunk.iter().map(|s| s.0).collect::<Vec<_>>());
            let (validation_mean, validation_std) = mean_std(&chunk.iter().map(|s| s.1).collect::<Vec<_>>());
            CurvePoint { train_size, train_mean, train_std, validation_mean, validation_std }
        })
        .collect();
    Ok(LearningCurve { folds, points })
}

/// Per-class rows followed by `macro` and `weighted` rows.
pub fn write_report_csv<W: Write>(r: &EvaluationReport, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["class", "precision", "recall", "f1", "support", "precision_undefined", "recall_undefined"])?;
    for m in &r.per_class {
        w.write_record([
            m.class.roman().to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.support.to_string(),
            m.precision_undefined.to_string(),
            m.recall_undefined.to_string(),
        ])?;
    }
    for (name, a) in [("macro", r.macro_avg), ("weighted", r.weighted_avg)] {
        w.write_record([
            name.to_string(),
            a.precision.to_string(),
            a.recall.to_string(),
            a.f1.to_string(),
            r.total.to_string(),
            String::new(),
            String::new(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_confusion_csv<W: Write>(cm: &ConfusionMatrix, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["true", "pred_I", "pred_II", "pred_III"])?;
    for c in CellClass::ALL {
        let row = cm.counts[c.index()];
        w.write_record([c.roman().to_string(), row[0].to_string(), row[1].to_string(), row[2].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_curve_csv<W: Write>(curve: &LearningCurve, w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["train_size", "train_mean", "train_std", "validation_mean", "validation_std"])?;
    for p in &curve.points {
        w.write_record([
            p.train_size.to_string(),
            p.train_mean.to_string(),
            p.train_std.to_string(),
            p.validation_mean.to_string(),
            p.validation_std.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
