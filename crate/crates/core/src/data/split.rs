use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CellClass, DataError, Dataset, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub stratified: bool,
}

fn default_true() -> bool {
    true
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { train_fraction: 0.8, seed: 42, stratified: true }
    }
}

/// Train/test index sets, each sorted ascending.
pub fn split_indices(labels: &[CellClass], s: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
        return Err(DataError::InvalidSplit(format!(
            "train_fraction {} is outside (0, 1)",
            s.train_fraction
        )));
    }
    if labels.len() < 2 {
        return Err(DataError::InvalidSplit(format!("{} record(s) cannot be split", labels.len())));
    }
    let mut rng = rng::seeded(s.seed, rng::stream::SPLIT);
    let groups: Vec<Vec<usize>> = if s.stratified {
        let mut by_class = vec![Vec::new(); CellClass::COUNT];
        for (i, l) in labels.iter().enumerate() {
            by_class[l.index()].push(i);
        }
        for (c, g) in by_class.iter().enumerate() {
            if g.len() == 1 {
                return Err(DataError::InsufficientClass {
                    class: CellClass::ALL[c],
                    count: 1,
                    needed: 2,
                });
            }
        }
        by_class.into_iter().filter(|g| !g.is_empty()).collect()
    } else {
        vec![(0..labels.len()).collect()]
    };

    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut g in groups {
        g.shuffle(&mut rng);
        let n = g.len();
        let n_train = ((n as f64 * s.train_fraction).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&g[..n_train]);
        test.extend_from_slice(&g[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits a dataset into train and test parts. Both keep the input order.
pub fn split(d: &Dataset, s: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(&d.labels(), s)?;
    Ok((d.select(&train, "train"), d.select(&test, "test")))
}
