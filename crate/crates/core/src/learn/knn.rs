use serde::{Deserialize, Serialize};

use super::{LearnError, Result};
use crate::data::{CellClass, FeatureTable, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Minkowski { p: f64 },
}

impl Metric {
    pub fn validate(&self) -> Result<()> {
        if let Metric::Minkowski { p } = self {
            if !(p.is_finite() && *p > 0.0) {
                return Err(LearnError::InvalidParams(format!("Minkowski p = {p} must be > 0")));
            }
        }
        Ok(())
    }

    /// Sum of per-coordinate powers, i.e. the distance raised to `p`. It
    /// preserves the neighbour ordering and skips the final root.
    fn power_sum(&self, a: &[f64], b: &[f64]) -> f64 {
        let it = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match *self {
            Metric::Euclidean => it.map(|d| d * d).sum(),
            Metric::Manhattan => it.sum(),
            Metric::Minkowski { p: 2.0 } => it.map(|d| d * d).sum(),
            Metric::Minkowski { p: 1.0 } => it.sum(),
            Metric::Minkowski { p } => it.map(|d| d.powf(p)).sum(),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let s = self.power_sum(a, b);
        match *self {
            Metric::Euclidean => s.sqrt(),
            Metric::Manhattan => s,
            Metric::Minkowski { p } => s.powf(1.0 / p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    #[serde(default = "default_metric")]
    pub metric: Metric,
}

fn default_metric() -> Metric {
    Metric::Euclidean
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5, metric: Metric::Euclidean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: Metric,
    pub x: Matrix,
    pub y: Vec<CellClass>,
}

pub fn fit_knn(train: &FeatureTable, p: &KnnParams) -> Result<KnnModel> {
    p.metric.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    if p.k == 0 {
        return Err(LearnError::InvalidParams("k must be >= 1".into()));
    }
    if p.k > train.len() {
        return Err(LearnError::KTooLarge { k: p.k, n: train.len() });
    }
    Ok(KnnModel { k: p.k, metric: p.metric, x: train.x.clone(), y: train.y.clone() })
}

impl KnnModel {
    /// Indices of the `k` nearest training rows, nearest first. Equal
    /// distances keep training order.
    pub fn neighbors(&self, row: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> =
            self.x.rows().enumerate().map(|(i, r)| (self.metric.power_sum(row, r), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(self.k);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Majority label among the k nearest; a vote tie goes to whichever tied
    /// class has the nearest member.
    pub fn predict_row(&self, row: &[f64]) -> CellClass {
        let nn = self.neighbors(row);
        let mut votes = [0usize; 3];
        for &i in &nn {
            votes[self.y[i].index()] += 1;
        }
        let top = *votes.iter().max().unwrap();
        nn.iter()
            .map(|&i| self.y[i])
            .find(|c| votes[c.index()] == top)
            .expect("k >= 1")
    }
}
