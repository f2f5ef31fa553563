//! Soft-margin kernel SVM, one-vs-rest over the classes present in training.
//!
//! Each binary problem is solved in the dual by sequential minimal
//! optimization: at every iteration the maximal KKT-violating pair is moved
//! analytically along the equality constraint and clipped to the box
//! `[0, C]`. The loop stops once the violation gap drops below `tolerance`
//! or after `max_iterations` pair updates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LearnError, Result};
use crate::data::{CellClass, FeatureTable, Matrix};

/// Curvature floor for non-PSD kernels (sigmoid).
const TAU: f64 = 1e-12;

fn default_degree() -> u32 {
    3
}

/// Kernel function. A missing `gamma` resolves at fit time to
/// `1 / (n_features · var(X))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Rbf {
        #[serde(default)]
        gamma: Option<f64>,
    },
    Polynomial {
        #[serde(default = "default_degree")]
        degree: u32,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        coef0: f64,
    },
    Sigmoid {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        coef0: f64,
    },
}

impl Kernel {
    fn gamma(&self) -> Option<f64> {
        match *self {
            Kernel::Linear => None,
            Kernel::Rbf { gamma } | Kernel::Polynomial { gamma, .. } | Kernel::Sigmoid { gamma, .. } => gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(g) = self.gamma() {
            if !(g.is_finite() && g > 0.0) {
                return Err(LearnError::InvalidParams(format!("kernel gamma {g} must be > 0")));
            }
        }
        match *self {
            Kernel::Polynomial { degree: 0, .. } => {
                Err(LearnError::InvalidParams("polynomial degree must be >= 1".into()))
            }
            Kernel::Polynomial { coef0, .. } | Kernel::Sigmoid { coef0, .. } if !coef0.is_finite() => {
                Err(LearnError::InvalidParams("coef0 must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Fills in the default gamma from the training matrix.
    pub fn resolve(self, x: &Matrix) -> Kernel {
        let scale = || {
            let v = x.as_slice();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
            if var > 0.0 {
                1.0 / (x.n_cols() as f64 * var)
            } else {
                1.0
            }
        };
        match self {
            Kernel::Linear => Kernel::Linear,
            Kernel::Rbf { gamma } => Kernel::Rbf { gamma: Some(gamma.unwrap_or_else(scale)) },
            Kernel::Polynomial { degree, gamma, coef0 } => {
                Kernel::Polynomial { degree, gamma: Some(gamma.unwrap_or_else(scale)), coef0 }
            }
            Kernel::Sigmoid { gamma, coef0 } => Kernel::Sigmoid { gamma: Some(gamma.unwrap_or_else(scale)), coef0 },
        }
    }

    /// Kernel value. Call on a resolved kernel; an unresolved gamma is taken as 1.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot = || a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        match *self {
            Kernel::Linear => dot(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma.unwrap_or(1.0) * d2).exp()
            }
            Kernel::Polynomial { degree, gamma, coef0 } => (gamma.unwrap_or(1.0) * dot() + coef0).powi(degree as i32),
            Kernel::Sigmoid { gamma, coef0 } => (gamma.unwrap_or(1.0) * dot() + coef0).tanh(),
        }
    }

    /// Full Gram matrix of the rows of `x`.
    pub fn gram(&self, x: &Matrix) -> Matrix {
        let n = x.n_rows();
        let data: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (0..n).map(move |j| self.eval(x.row(i), x.row(j))))
            .collect();
        Matrix::from_vec(n, n, data).expect("n x n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: Kernel,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, kernel: Kernel::Rbf { gamma: None }, max_iterations: 10_000, tolerance: 1e-3 }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(LearnError::InvalidParams(format!("C = {} must be > 0", self.c)));
        }
        if self.max_iterations == 0 {
            return Err(LearnError::InvalidParams("max_iterations must be >= 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(LearnError::InvalidParams(format!("tolerance {} must be > 0", self.tolerance)));
        }
        self.kernel.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Converged,
    IterationCapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    /// Offset; the decision value is `Σ αᵢyᵢK(xᵢ, x) − rho`.
    pub rho: f64,
    pub iterations: usize,
    pub status: ConvergenceStatus,
}

/// Dual objective `Σα − ½ Σᵢⱼ αᵢαⱼyᵢyⱼKᵢⱼ` (to be maximized).
pub fn dual_objective(gram: &Matrix, y: &[f64], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram.get(i, j);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Solves one binary dual problem on a precomputed Gram matrix. `labels`
/// holds ±1. `observer` sees the multipliers after every pair update.
pub fn solve_binary(
    gram: &Matrix,
    labels: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
    mut observer: impl FnMut(&[f64]),
) -> BinarySolution {
    let n = labels.len();
    let y = labels;
    let q = |i: usize, j: usize| y[i] * y[j] * gram.get(i, j);
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; n];
    let mut status = ConvergenceStatus::IterationCapped;
    let mut iterations = 0;

    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    while iterations < max_iterations {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || g_max - g_min < tolerance {
            status = ConvergenceStatus::Converged;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
        observer(&alpha);
    }

    BinarySolution { rho: offset(&alpha, &grad, y, c), alpha, iterations, status }
}

/// Offset from the free multipliers, or the midpoint of the feasible
/// interval when every multiplier sits at a bound.
fn offset(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    }
}

/// One class-versus-rest machine, keeping only its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub class: CellClass,
    pub support_vectors: Matrix,
    /// αᵢyᵢ for each support vector.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub status: ConvergenceStatus,
}

impl BinarySvm {
    pub fn decision(&self, kernel: &Kernel, row: &[f64]) -> f64 {
        self.support_vectors
            .rows()
            .zip(&self.coef)
            .map(|(sv, a)| a * kernel.eval(sv, row))
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    /// Kernel with gamma resolved.
    pub kernel: Kernel,
    pub c: f64,
    pub machines: Vec<BinarySvm>,
}

impl SvmModel {
    pub fn status(&self) -> ConvergenceStatus {
        if self.machines.iter().all(|m| m.status == ConvergenceStatus::Converged) {
            ConvergenceStatus::Converged
        } else {
            ConvergenceStatus::IterationCapped
        }
    }

    pub fn decision_values(&self, row: &[f64]) -> Vec<(CellClass, f64)> {
        self.machines.iter().map(|m| (m.class, m.decision(&self.kernel, row))).collect()
    }

    /// Class with the largest decision value; ties go to the lower ordinal.
    pub fn predict_row(&self, row: &[f64]) -> CellClass {
        let mut best = (self.machines[0].class, f64::NEG_INFINITY);
        for (c, v) in self.decision_values(row) {
            if v > best.1 {
                best = (c, v);
            }
        }
        best.0
    }
}

pub fn fit_svm(train: &FeatureTable, p: &SvmParams) -> Result<SvmModel> {
    p.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let counts = train.class_counts();
    let present: Vec<CellClass> = CellClass::ALL.into_iter().filter(|c| counts[c.index()] > 0).collect();
    if present.len() < 2 {
        return Err(LearnError::SingleClass(present[0]));
    }
    let kernel = p.kernel.resolve(&train.x);
    let gram = kernel.gram(&train.x);
    let machines = present
        .par_iter()
        .map(|&class| {
            let y: Vec<f64> = train.y.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            let sol = solve_binary(&gram, &y, p.c, p.tolerance, p.max_iterations, |_| {});
            let sv: Vec<usize> = (0..y.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
            if sol.status == ConvergenceStatus::IterationCapped {
                log::info!("SVM for class {class} stopped at the iteration cap ({})", sol.iterations);
            }
            BinarySvm {
                class,
                support_vectors: train.x.select_rows(&sv),
                coef: sv.iter().map(|&i| sol.alpha[i] * y[i]).collect(),
                rho: sol.rho,
                iterations: sol.iterations,
                status: sol.status,
            }
        })
        .collect();
    Ok(SvmModel { kernel, c: p.c, machines })
}
