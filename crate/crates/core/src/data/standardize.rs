use serde::{Deserialize, Serialize};

use super::{DataError, FeatureTable, Matrix, Result};

/// Per-feature z-score parameters, fitted on a training split.
///
/// Uses the population (divide-by-n) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(x: &Matrix, features: &[String]) -> Result<Self> {
        if x.n_rows() == 0 {
            return Err(DataError::Empty);
        }
        if features.len() != x.n_cols() {
            return Err(DataError::Dimension { expected: x.n_cols(), found: features.len() });
        }
        let n = x.n_rows() as f64;
        let mut mean = Vec::with_capacity(x.n_cols());
        let mut std = Vec::with_capacity(x.n_cols());
        for (j, name) in features.iter().enumerate() {
            let col = x.column(j);
            let (lo, hi) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            if lo == hi || s == 0.0 || !s.is_finite() {
                return Err(DataError::ZeroVariance { feature: name.clone() });
            }
            mean.push(m);
            std.push(s);
        }
        Ok(StandardizationParams { features: features.to_vec(), mean, std })
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.n_cols() != self.mean.len() {
            return Err(DataError::Dimension { expected: self.mean.len(), found: x.n_cols() });
        }
        Ok(())
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for i in 0..out.n_rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, v)| (v - self.mean[j]) / self.std[j]).collect()
    }

    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix> {
        self.check(z)?;
        let mut out = z.clone();
        for i in 0..out.n_rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        Ok(out)
    }
}

/// Fits z-score parameters on every column of a training table.
pub fn fit_standardizer(train: &FeatureTable) -> Result<StandardizationParams> {
    StandardizationParams::fit(&train.x, &train.names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn two_point_example() {
        let x = Matrix::from_rows(&[[1.0], [3.0]]).unwrap();
        let p = StandardizationParams::fit(&x, &names(1)).unwrap();
        assert_eq!((p.mean[0], p.std[0]), (2.0, 1.0));
        assert_eq!(p.transform(&x).unwrap().column(0), vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_column_is_named() {
        let x = Matrix::from_rows(&[[1.0, 0.1], [2.0, 0.1], [3.0, 0.1]]).unwrap();
        match StandardizationParams::fit(&x, &names(2)) {
            Err(DataError::ZeroVariance { feature }) => assert_eq!(feature, "f1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transformed_train_is_centered() {
        let rows: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 * 1.7 + 3.0, (i as f64).sin() * 1e6]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let p = StandardizationParams::fit(&x, &names(2)).unwrap();
        let z = p.transform(&x).unwrap();
        for j in 0..2 {
            let col = z.column(j);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let v = col.iter().map(|c| (c - m).powi(2)).sum::<f64>() / col.len() as f64;
            assert!(m.abs() < 1e-10);
            assert!((v.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn inverse_round_trip(rows in prop::collection::vec(prop::array::uniform3(-1e6f64..1e6), 2..40)) {
            let x = Matrix::from_rows(&rows).unwrap();
            if let Ok(p) = StandardizationParams::fit(&x, &names(3)) {
                let back = p.inverse_transform(&p.transform(&x).unwrap()).unwrap();
                for (a, b) in x.as_slice().iter().zip(back.as_slice()) {
                    let scale = p.std.iter().cloned().fold(0.0, f64::max) + a.abs();
                    prop_assert!((a - b).abs() <= 1e-10 * scale);
                }
            }
        }
    }
}
