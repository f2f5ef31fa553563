use proptest::prelude::*;

use dielectric_ml::data::{CellClass, FeatureTable, Matrix};
use dielectric_ml::eval;
use dielectric_ml::learn::{
    fit_forest, fit_knn, fit_model, fit_tree, FeaturesPerSplit, Kernel, KnnParams, Metric, ModelSpec,
    RandomForestParams, SplitRule, SvmParams, TreeParams,
};
use dielectric_ml::rng;

fn table(rows: &[Vec<f64>], y: &[CellClass]) -> FeatureTable {
    let names = (0..rows[0].len()).map(|i| format!("f{i}")).collect();
    FeatureTable::new(names, Matrix::from_rows(rows).unwrap(), y.to_vec()).unwrap()
}

/// Distinct points: the first coordinate is the row index.
fn distinct_points() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<CellClass>)> {
    (3usize..40).prop_flat_map(|n| {
        (
            proptest::collection::vec(proptest::collection::vec(-5.0..5.0f64, 2), n),
            proptest::collection::vec(0usize..3, n),
        )
            .prop_map(|(xs, ys)| {
                let rows = xs.into_iter().enumerate().map(|(i, mut r)| {
                    r.insert(0, i as f64);
                    r
                });
                (rows.collect(), ys.into_iter().map(|c| CellClass::ALL[c]).collect())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn one_neighbour_memorizes((x, y) in distinct_points()) {
        let m = fit_knn(&table(&x, &y), &KnnParams { k: 1, metric: Metric::Euclidean }).unwrap();
        for (r, c) in x.iter().zip(&y) {
            prop_assert_eq!(m.predict_row(r), *c);
        }
    }

    #[test]
    fn knn_with_all_points_predicts_majority((x, y) in distinct_points(), q in proptest::collection::vec(-9.0..9.0f64, 3)) {
        let n = x.len();
        let m = fit_knn(&table(&x, &y), &KnnParams { k: n, metric: Metric::Manhattan }).unwrap();
        let counts = dielectric_ml::data::class_counts(y.iter().copied());
        let top = *counts.iter().max().unwrap();
        prop_assert_eq!(counts[m.predict_row(&q).index()], top);
    }

    #[test]
    fn deep_tree_fits_distinct_points((x, y) in distinct_points(), seed in 0u64..1000) {
        let p = TreeParams { max_depth: 64, features_per_split: FeaturesPerSplit::Rule(SplitRule::Sqrt) };
        let t = fit_tree(&Matrix::from_rows(&x).unwrap(), &y, &p, &mut rng::seeded(seed, 0)).unwrap();
        for (r, c) in x.iter().zip(&y) {
            prop_assert_eq!(t.predict_row(r), *c);
        }
    }

    #[test]
    fn tree_depth_respects_limit((x, y) in distinct_points(), depth in 1usize..5) {
        let p = TreeParams { max_depth: depth, features_per_split: FeaturesPerSplit::Rule(SplitRule::All) };
        let t = fit_tree(&Matrix::from_rows(&x).unwrap(), &y, &p, &mut rng::seeded(0, 0)).unwrap();
        prop_assert!(t.depth() <= depth);
        prop_assert!(t.n_leaves() <= 1 << depth);
    }

    #[test]
    fn importances_form_a_distribution((x, y) in distinct_points(), seed in 0u64..1000) {
        let t = table(&x, &y);
        let (_, imp) = fit_forest(&t, &RandomForestParams { n_estimators: 8, max_depth: 4, seed, ..Default::default() }).unwrap();
        prop_assert!(imp.weights.iter().all(|&w| w >= 0.0));
        let s: f64 = imp.weights.iter().sum();
        prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn forest_is_deterministic_under_seed((x, y) in distinct_points(), seed in 0u64..1000) {
        let t = table(&x, &y);
        let p = RandomForestParams { n_estimators: 6, max_depth: 6, seed, ..Default::default() };
        prop_assert_eq!(fit_forest(&t, &p).unwrap(), fit_forest(&t, &p).unwrap());
    }
}

#[test]
fn linear_svm_separates_three_blobs() {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (c, centre) in [(CellClass::Normal, -6.0), (CellClass::Benign, 0.0), (CellClass::Malignant, 6.0)] {
        for k in 0..10 {
            rows.push(vec![centre + (k as f64 * 0.37).sin(), (k as f64 * 0.91).cos()]);
            y.push(c);
        }
    }
    let t = table(&rows, &y);
    let spec = ModelSpec::Svm(SvmParams { kernel: Kernel::Rbf { gamma: None }, c: 10.0, ..Default::default() });
    let (m, info) = fit_model(&t, &spec).unwrap();
    assert_eq!(eval::evaluate(&m, &t).unwrap().accuracy, 1.0);
    assert!(info.convergence.is_some());
}

#[test]
fn majority_baseline_predicts_most_frequent() {
    let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
    let y = [vec![CellClass::Benign; 5], vec![CellClass::Normal; 4]].concat();
    let (m, _) = fit_model(&table(&rows, &y), &ModelSpec::Majority).unwrap();
    assert!(rows.iter().all(|r| m.predict_row(r).unwrap() == CellClass::Benign));
}
