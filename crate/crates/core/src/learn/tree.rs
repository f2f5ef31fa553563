//! CART-style classification tree with Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values.
//! A sample goes left when `x[feature] <= threshold`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax_class, LearnError, Result};
use crate::data::{CellClass, Matrix};
use crate::rng::Rng;

/// Smallest impurity decrease accepted as a real split.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    Sqrt,
    All,
}

/// How many features to examine at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FeaturesPerSplit {
    Count(usize),
    Rule(SplitRule),
}

impl Default for FeaturesPerSplit {
    fn default() -> Self {
        FeaturesPerSplit::Rule(SplitRule::Sqrt)
    }
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_features: usize) -> usize {
        let n = match self {
            FeaturesPerSplit::Count(c) => c,
            FeaturesPerSplit::Rule(SplitRule::All) => n_features,
            FeaturesPerSplit::Rule(SplitRule::Sqrt) => (n_features as f64).sqrt().floor() as usize,
        };
        n.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum number of split levels below the root.
    pub max_depth: usize,
    #[serde(default)]
    pub features_per_split: FeaturesPerSplit,
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(LearnError::InvalidParams("max_depth must be >= 1".into()));
        }
        if self.features_per_split == FeaturesPerSplit::Count(0) {
            return Err(LearnError::InvalidParams("features_per_split must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { counts: [u32; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    /// Unnormalized weighted impurity decrease per feature.
    pub impurity_decrease: Vec<f64>,
}

impl DecisionTree {
    fn leaf_for(&self, row: &[f64]) -> &[u32; 3] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    /// Majority class of the leaf reached by `row`.
    pub fn predict_row(&self, row: &[f64]) -> CellClass {
        argmax_class(self.leaf_for(row))
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Fits on the rows listed in `sample` (duplicates allowed, as produced by
    /// bootstrap resampling).
    pub fn fit_on_sample(
        x: &Matrix,
        y: &[CellClass],
        sample: &[usize],
        params: &TreeParams,
        rng: &mut Rng,
    ) -> Result<DecisionTree> {
        params.validate()?;
        if sample.is_empty() || x.n_rows() == 0 {
            return Err(LearnError::EmptyTrainingSet);
        }
        if y.len() != x.n_rows() {
            return Err(LearnError::Dimension { expected: x.n_rows(), found: y.len() });
        }
        let mut b = Builder {
            x,
            y,
            max_depth: params.max_depth,
            mtry: params.features_per_split.resolve(x.n_cols()),
            total: sample.len() as f64,
            nodes: Vec::new(),
            decrease: vec![0.0; x.n_cols()],
            rng,
            order: (0..x.n_cols()).collect(),
            buf: Vec::with_capacity(sample.len()),
        };
        let mut idx = sample.to_vec();
        b.build(&mut idx, 0);
        Ok(DecisionTree { n_features: x.n_cols(), nodes: b.nodes, impurity_decrease: b.decrease })
    }
}

/// Fits a tree on every row of `x`.
pub fn fit_tree(x: &Matrix, y: &[CellClass], params: &TreeParams, rng: &mut Rng) -> Result<DecisionTree> {
    let all: Vec<usize> = (0..x.n_rows()).collect();
    DecisionTree::fit_on_sample(x, y, &all, params, rng)
}

pub(crate) fn gini(counts: &[u32; 3], n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [CellClass],
    max_depth: usize,
    mtry: usize,
    total: f64,
    nodes: Vec<Node>,
    decrease: Vec<f64>,
    rng: &'a mut Rng,
    order: Vec<usize>,
    buf: Vec<(f64, usize)>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [u32; 3] {
        let mut c = [0u32; 3];
        for &i in idx {
            c[self.y[i].index()] += 1;
        }
        c
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let n = idx.len() as u32;
        let impurity = gini(&counts, n);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        if depth >= self.max_depth || impurity <= 0.0 || n < 2 {
            return id;
        }
        let Some(best) = self.best_split(idx, &counts, impurity) else {
            return id;
        };

        // partition in place: left block first
        let mut lo = 0;
        for k in 0..idx.len() {
            if self.x.get(idx[k], best.feature) <= best.threshold {
                idx.swap(lo, k);
                lo += 1;
            }
        }
        self.decrease[best.feature] += (n as f64 / self.total) * best.gain;
        let (l, r) = idx.split_at_mut(lo);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }

    fn best_split(&mut self, idx: &[usize], counts: &[u32; 3], impurity: f64) -> Option<Candidate> {
        let n = idx.len() as u32;
        self.order.shuffle(self.rng);
        let mut best: Option<Candidate> = None;
        let mut examined = 0;
        for oi in 0..self.order.len() {
            if examined >= self.mtry {
                break;
            }
            let f = self.order[oi];
            self.buf.clear();
            self.buf.extend(idx.iter().map(|&i| (self.x.get(i, f), i)));
            self.buf.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[self.buf.len() - 1].0 {
                // constant here; does not count toward mtry
                continue;
            }
            examined += 1;
            let mut left = [0u32; 3];
            for k in 0..self.buf.len() - 1 {
                left[self.y[self.buf[k].1].index()] += 1;
                let (a, b) = (self.buf[k].0, self.buf[k + 1].0);
                if a == b {
                    continue;
                }
                let nl = k as u32 + 1;
                let nr = n - nl;
                let right = [counts[0] - left[0], counts[1] - left[1], counts[2] - left[2]];
                let child =
                    (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                let gain = impurity - child;
                if gain <= MIN_GAIN {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(bst) => gain > bst.gain || (gain == bst.gain && f < bst.feature),
                };
                if better {
                    let mut threshold = a / 2.0 + b / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Candidate { feature: f, threshold, gain });
                }
            }
        }
        best
    }
}
