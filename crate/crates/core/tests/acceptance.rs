//! Acceptance suite. Every criterion prints one PASS/FAIL line; the test
//! fails if any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dielectric_ml::data::{generate, split_indices, CellClass, FeatureTable, GeneratorSpec, Matrix, SplitSpec};
use dielectric_ml::eval::{self, ConfusionMatrix};
use dielectric_ml::learn::{
    dual_objective, fit_forest, fit_knn, fit_model, fit_svm, fit_tree, solve_binary, Classifier, ConvergenceStatus,
    FeaturesPerSplit, Kernel, KnnParams, Metric, ModelSpec, Node, RandomForestParams, SplitRule, SvmParams,
    TrainedModel, TreeParams,
};
use dielectric_ml::physics::{
    charge_relaxation_time, cole_cole_permittivity, imaginary_permittivity, internal_field, loss_tangent,
    mixture_impedance, surface_potential, CircuitParams, ColeColeParams, SphereModel,
};
use dielectric_ml::pipeline::{featurize, select_and_retrain, FeatureConfig, SelectionSpec};

const SPLIT_SEED: u64 = 42;
const FOREST_SEED: u64 = 7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rf(n_estimators: usize, max_depth: usize) -> ModelSpec {
    ModelSpec::RandomForest(RandomForestParams { n_estimators, max_depth, seed: FOREST_SEED, ..Default::default() })
}

fn corpus_tables(features: FeatureConfig, train_fraction: f64, seed: u64) -> (FeatureTable, FeatureTable) {
    let d = generate(&GeneratorSpec::default()).unwrap();
    let t = featurize(&d, &features).unwrap().table;
    let (tr, te) = split_indices(&t.y, &SplitSpec { train_fraction, seed, stratified: true }).unwrap();
    (t.subset(&tr), t.subset(&te))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

// 1

fn physics_exactness() -> Outcome {
    let mut bad = Vec::new();
    for &e0 in &[0.0, 1.0, 250.0, 1e5] {
        let m = SphereModel { e0, radius: 5e-6, eps_r: 1.0 };
        if internal_field(&m).unwrap() != e0 {
            bad.push(format!("internal field at eps_r=1, E0={e0}"));
        }
    }
    for &r_e in &[1.0, 47.5, 1e4] {
        let c = CircuitParams { r_e, r_i: 120.0, c_m: 1e-9 };
        let z = mixture_impedance(&c, 0.0).unwrap();
        if z.re != r_e || z.im != 0.0 {
            bad.push(format!("Z(0) = {z} for R_e = {r_e}"));
        }
    }
    let mut worst = 0.0f64;
    for &(ei, es, tau) in &[(2.0, 80.0, 1e-9), (4.0, 9.0, 1e-6), (30.0, 110.0, 3e-8)] {
        let p = ColeColeParams::debye(ei, es, tau);
        let (centre, radius) = ((es + ei) / 2.0, (es - ei) / 2.0);
        for k in 0..=400 {
            let f = 10f64.powf(-2.0 + 14.0 * k as f64 / 400.0);
            let e = cole_cole_permittivity(&p, f).unwrap();
            let dev = ((e.re - centre).hypot(e.im) - radius).abs();
            worst = worst.max(dev);
        }
    }
    if worst >= 1e-9 {
        bad.push(format!("Debye semicircle deviation {worst:e}"));
    }
    let mut r = rng(1);
    for _ in 0..1000 {
        let m = SphereModel { e0: r.random_range(0.0..1e4), radius: r.random_range(1e-7..1e-4), eps_r: r.random_range(1.0..100.0) };
        let th = r.random_range(0.0..PI);
        let (a, b) = (surface_potential(&m, th).unwrap(), surface_potential(&m, PI - th).unwrap());
        let scale = internal_field(&m).unwrap() * m.radius;
        if (a + b).abs() > 1e-12 * scale {
            bad.push(format!("surface potential not antisymmetric at theta={th}"));
            break;
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { format!("max semicircle deviation {worst:.1e}") } else { bad.join("; ") })
}

// 2

fn derived_feature_oracle() -> Outcome {
    const E0: f64 = 8.8541878128e-12;
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let f = 10f64.powf(r.random_range(5.0..10.5));
        let sigma = 10f64.powf(r.random_range(-4.0..1.5));
        let eps_r = r.random_range(1.0..200.0);
        let want_im = sigma / (2.0 * PI * f * E0);
        let want_tan = sigma / (2.0 * PI * f * E0 * eps_r);
        let want_tau = E0 * eps_r / sigma;
        let got = [
            (imaginary_permittivity(sigma, f).unwrap(), want_im),
            (loss_tangent(sigma, eps_r, f).unwrap(), want_tan),
            (charge_relaxation_time(sigma, eps_r).unwrap(), want_tau),
        ];
        for (g, w) in got {
            worst = worst.max((g - w).abs() / w.abs());
        }
    }
    outcome(worst <= 1e-10, format!("max relative error {worst:.1e} over 1000 triples"))
}

// 3

fn knn_oracle(x: &[Vec<f64>], y: &[CellClass], k: usize, q: &[f64]) -> CellClass {
    let mut d: Vec<(f64, usize)> = x
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let near: Vec<CellClass> = d[..k].iter().map(|&(_, i)| y[i]).collect();
    let count = |c: CellClass| near.iter().filter(|&&n| n == c).count();
    let top = CellClass::ALL.iter().map(|&c| count(c)).max().unwrap();
    *near.iter().find(|&&c| count(c) == top).unwrap()
}

fn gini(c: &[usize; 3]) -> f64 {
    let n: usize = c.iter().sum();
    if n == 0 {
        return 0.0;
    }
    1.0 - c.iter().map(|&v| (v as f64 / n as f64).powi(2)).sum::<f64>()
}

/// Largest impurity decrease over every feature and every cut between
/// distinct values.
fn best_gain(x: &[Vec<f64>], y: &[CellClass], rows: &[usize]) -> f64 {
    let mut all = [0usize; 3];
    for &i in rows {
        all[y[i].index()] += 1;
    }
    let parent = gini(&all);
    let n = rows.len() as f64;
    let mut best = 0.0f64;
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (mut l, mut r) = ([0usize; 3], [0usize; 3]);
            for &i in rows {
                if x[i][f] <= t { l[y[i].index()] += 1 } else { r[y[i].index()] += 1 }
            }
            let (nl, nr) = (l.iter().sum::<usize>() as f64, r.iter().sum::<usize>() as f64);
            best = best.max(parent - (nl * gini(&l) + nr * gini(&r)) / n);
        }
    }
    best
}

fn split_gain(x: &[Vec<f64>], y: &[CellClass], rows: &[usize], f: usize, t: f64) -> f64 {
    let (mut l, mut r, mut a) = ([0usize; 3], [0usize; 3], [0usize; 3]);
    for &i in rows {
        a[y[i].index()] += 1;
        if x[i][f] <= t { l[y[i].index()] += 1 } else { r[y[i].index()] += 1 }
    }
    let (nl, nr) = (l.iter().sum::<usize>() as f64, r.iter().sum::<usize>() as f64);
    gini(&a) - (nl * gini(&l) + nr * gini(&r)) / rows.len() as f64
}

fn random_points(r: &mut ChaCha8Rng, n: usize, d: usize, grid: bool) -> (Vec<Vec<f64>>, Vec<CellClass>) {
    let x = (0..n)
        .map(|_| (0..d).map(|_| if grid { r.random_range(0..4) as f64 } else { r.random_range(-1.0..1.0) }).collect())
        .collect();
    let y = (0..n).map(|_| CellClass::ALL[r.random_range(0..3)]).collect();
    (x, y)
}

fn table(x: &[Vec<f64>], y: &[CellClass]) -> FeatureTable {
    let names = (0..x[0].len()).map(|i| format!("f{i}")).collect();
    FeatureTable::new(names, Matrix::from_rows(x).unwrap(), y.to_vec()).unwrap()
}

fn classifier_oracles() -> Outcome {
    let mut r = rng(3);
    let mut bad = Vec::new();

    for q in 0..100 {
        let (x, y) = random_points(&mut r, 10, 2, q % 2 == 0);
        let k = r.random_range(1..=10);
        let m = fit_knn(&table(&x, &y), &KnnParams { k, metric: Metric::Euclidean }).unwrap();
        let query: Vec<f64> = (0..2).map(|_| r.random_range(0..4) as f64).collect();
        if m.predict_row(&query) != knn_oracle(&x, &y, k, &query) {
            bad.push(format!("knn query {q}"));
        }
    }

    let mut nodes_checked = 0;
    for case in 0..200 {
        let n = r.random_range(2..=10);
        let d = r.random_range(1..=3);
        let (x, y) = random_points(&mut r, n, d, case % 2 == 0);
        let depth = r.random_range(1..=3);
        let params = TreeParams { max_depth: depth, features_per_split: FeaturesPerSplit::Rule(SplitRule::All) };
        let t = fit_tree(&Matrix::from_rows(&x).unwrap(), &y, &params, &mut dielectric_ml::rng::seeded(case, 0)).unwrap();
        // walk the tree carrying the rows that reach each node
        let mut stack = vec![(0usize, (0..n).collect::<Vec<_>>(), 0usize)];
        while let Some((id, rows, level)) = stack.pop() {
            nodes_checked += 1;
            let best = best_gain(&x, &y, &rows);
            match t.nodes[id] {
                Node::Split { feature, threshold, left, right } => {
                    let g = split_gain(&x, &y, &rows, feature, threshold);
                    if (g - best).abs() > 1e-12 || g <= 0.0 {
                        bad.push(format!("tree case {case}: split gain {g} vs best {best}"));
                    }
                    let (l, rr): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][feature] <= threshold);
                    stack.push((left, l, level + 1));
                    stack.push((right, rr, level + 1));
                }
                Node::Leaf { .. } => {
                    if level < depth && best > 1e-12 {
                        bad.push(format!("tree case {case}: leaf at level {level} leaves gain {best}"));
                    }
                }
            }
        }
    }

    let (x, y) = random_points(&mut r, 60, 3, false);
    let t = table(&x, &y);
    let (forest, _) = fit_forest(&t, &RandomForestParams { n_estimators: 25, max_depth: 4, seed: 5, ..Default::default() }).unwrap();
    for _ in 0..100 {
        let q: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
        let votes = forest.tree_predictions(&q);
        let count = |c: CellClass| votes.iter().filter(|&&v| v == c).count();
        let mode = CellClass::ALL.into_iter().rev().max_by_key(|&c| count(c)).unwrap();
        if forest.predict_row(&q) != mode {
            bad.push("forest vote".into());
        }
    }
    let detail = format!("100 knn queries, {nodes_checked} tree nodes, 100 forest votes");
    outcome(bad.is_empty(), if bad.is_empty() { detail } else { bad.join("; ") })
}

// 4

fn depth_trend() -> Outcome {
    let (train, test) = corpus_tables(FeatureConfig::primary_only(), 0.8, SPLIT_SEED);
    let f1 = |spec| eval::evaluate(&fit_model(&train, &spec).unwrap().0, &test).unwrap().macro_avg.f1;
    let (d1, d5, d10, d10x300) = (f1(rf(100, 1)), f1(rf(100, 5)), f1(rf(100, 10)), f1(rf(300, 10)));
    let pass = d1 + 0.05 <= d5 && d5 + 0.05 <= d10 && d10x300 >= 0.85;
    outcome(pass, format!("macro F1 depth 1 {d1:.3}, depth 5 {d5:.3}, depth 10 {d10:.3}, depth 10 x300 {d10x300:.3}"))
}

// 5

fn knn_behaviour() -> Outcome {
    const REPS: u64 = 20;
    let ks = [1, 3, 4, 5, 19];
    let d = generate(&GeneratorSpec::default()).unwrap();
    let t = featurize(&d, &FeatureConfig::primary_only()).unwrap().table;
    let mut train_acc = [0.0; 5];
    let mut test_acc = [0.0; 5];
    let mut k1_perfect = true;
    for rep in 0..REPS {
        let (tr, te) = split_indices(&t.y, &SplitSpec { train_fraction: 0.7, seed: 100 + rep, stratified: true }).unwrap();
        let (train, test) = (t.subset(&tr), t.subset(&te));
        for (j, &k) in ks.iter().enumerate() {
            let (m, _) = fit_model(&train, &ModelSpec::Knn(KnnParams { k, metric: Metric::Euclidean })).unwrap();
            let a = eval::evaluate(&m, &train).unwrap().accuracy;
            k1_perfect &= k != 1 || a == 1.0;
            train_acc[j] += a / REPS as f64;
            test_acc[j] += eval::evaluate(&m, &test).unwrap().accuracy / REPS as f64;
        }
    }
    let margin_ok = test_acc[1..4].iter().all(|&a| a >= test_acc[4] + 0.05);
    let gap1 = train_acc[0] - test_acc[0];
    let gap5 = train_acc[3] - test_acc[3];
    outcome(
        k1_perfect && margin_ok && gap1 > gap5,
        format!(
            "k=1 train {} in every split; test k=3/4/5 {:.3}/{:.3}/{:.3} vs k=19 {:.3}; gap k=1 {gap1:.3} vs k=5 {gap5:.3}",
            if k1_perfect { "1.0" } else { "below 1.0" },
            test_acc[1],
            test_acc[2],
            test_acc[3],
            test_acc[4]
        ),
    )
}

// 6

fn learning_curve_overfit() -> Outcome {
    let (train, _) = corpus_tables(FeatureConfig::default(), 0.8, SPLIT_SEED);
    let sizes = eval::size_grid(train.len(), 5, 5, 0.1);
    let lc = eval::learning_curve(&train, &rf(500, 15), &sizes, 5, SPLIT_SEED).unwrap();
    let pass = lc.points.iter().all(|p| p.train_mean >= p.validation_mean);
    let detail = lc
        .points
        .iter()
        .map(|p| format!("{}: {:.3}/{:.3}", p.train_size, p.train_mean, p.validation_mean))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("train/validation by size {detail}"))
}

// 7

fn physics_informed_selection() -> Outcome {
    let (train, test) = corpus_tables(FeatureConfig::default(), 0.8, SPLIT_SEED);
    let p = RandomForestParams { n_estimators: 100, max_depth: 5, seed: FOREST_SEED, ..Default::default() };
    let s = select_and_retrain(&train, &test, &SelectionSpec { importance_threshold: 0.1 }, &p).unwrap();
    let full = eval::evaluate(&fit_model(&train, &ModelSpec::RandomForest(p)).unwrap().0, &test).unwrap().accuracy;
    let allowed = ["imag_permittivity", "conductivity_s_per_m", "relative_permittivity", "loss_tangent"];
    let subset = !s.retained.is_empty() && s.retained.iter().all(|f| allowed.contains(&f.as_str()));
    let reduced = s.evaluation.accuracy;
    outcome(
        subset && (reduced - full).abs() <= 0.05,
        format!("retained {:?}; reduced accuracy {reduced:.3} vs full {full:.3}", s.retained),
    )
}

// 8

fn svm_optimization() -> Outcome {
    let mut bad = Vec::new();
    // fixed 20-point problem with overlapping classes
    let pts: Vec<Vec<f64>> = (0..20).map(|i| {
        let t = i as f64;
        vec![(t * 0.7).sin() * 2.0 + t * 0.05, (t * 1.3).cos() * 1.5]
    }).collect();
    let labels: Vec<f64> = (0..20).map(|i| if (i * 7) % 5 < 2 { 1.0 } else { -1.0 }).collect();
    let x = Matrix::from_rows(&pts).unwrap();
    let kernel = Kernel::Rbf { gamma: Some(0.5) };
    let gram = kernel.gram(&x);
    let mut objectives = vec![0.0];
    let sol = solve_binary(&gram, &labels, 1.0, 1e-6, 10_000, |a| objectives.push(dual_objective(&gram, &labels, a)));
    let drops = objectives.windows(2).filter(|w| w[1] < w[0] - 1e-12 * w[0].abs().max(1.0)).count();
    if drops > 0 || sol.status != ConvergenceStatus::Converged {
        bad.push(format!("{drops} objective decrease(s), status {:?}", sol.status));
    }

    let sep: Vec<Vec<f64>> = (0..16).map(|i| vec![if i < 8 { -1.0 - i as f64 * 0.1 } else { 1.0 + i as f64 * 0.1 }, (i % 4) as f64]).collect();
    let sep_y: Vec<CellClass> = (0..16).map(|i| if i < 8 { CellClass::Normal } else { CellClass::Malignant }).collect();
    let sep_t = table(&sep, &sep_y);
    let m = fit_svm(&sep_t, &SvmParams { kernel: Kernel::Linear, c: 10.0, ..Default::default() }).unwrap();
    let acc = sep_t.x.rows().zip(&sep_y).filter(|(r, y)| m.predict_row(r) == **y).count() as f64 / 16.0;
    if acc != 1.0 {
        bad.push(format!("separable toy training accuracy {acc}"));
    }

    let (train, test) = corpus_tables(FeatureConfig::primary_only(), 0.8, SPLIT_SEED);
    let capped = SvmParams { max_iterations: 5, ..Default::default() };
    let (model, info) = fit_model(&train, &ModelSpec::Svm(capped)).unwrap();
    let capped_acc = eval::evaluate(&model, &test).map(|r| r.accuracy);
    if info.convergence != Some(ConvergenceStatus::IterationCapped) || !capped_acc.as_ref().is_ok_and(|a| a.is_finite()) {
        bad.push(format!("capped run: status {:?}, accuracy {capped_acc:?}", info.convergence));
    }
    let detail = format!(
        "{} updates without decrease; separable toy accuracy {acc}; capped run flagged, test accuracy {:.3}",
        objectives.len() - 1,
        capped_acc.unwrap_or(f64::NAN)
    );
    outcome(bad.is_empty(), if bad.is_empty() { detail } else { bad.join("; ") })
}

// 9

fn cli(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_dielml"))
        .current_dir(dir)
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn end_to_end(dir: &Path, threads: &str) -> Vec<(String, Vec<u8>)> {
    std::fs::create_dir_all(dir).unwrap();
    let ok = cli(dir, &["--threads", threads, "generate", "--out", "dataset.csv"])
        && cli(dir, &["--threads", threads, "--output-dir", "run", "train", "dataset.csv"])
        && cli(dir, &["--threads", threads, "--output-dir", "run", "report", "run/report.json"]);
    assert!(ok, "CLI run in {} failed", dir.display());
    let mut files = vec!["dataset.csv".to_string()];
    files.extend(["model.json", "report.json", "confusion.csv", "per_class.csv", "importances.csv"].map(|f| format!("run/{f}")));
    files.into_iter().map(|f| { let b = std::fs::read(dir.join(&f)).unwrap(); (f, b) }).collect()
}

fn determinism_and_serialization() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let a = end_to_end(&tmp.path().join("a"), "4");
    let b = end_to_end(&tmp.path().join("b"), "4");
    let c = end_to_end(&tmp.path().join("c"), "1");
    let mut bad: Vec<String> = Vec::new();
    for ((fa, xa), ((_, xb), (_, xc))) in a.iter().zip(b.iter().zip(&c)) {
        if xa != xb {
            bad.push(format!("{fa} differs between runs"));
        }
        if xa != xc {
            bad.push(format!("{fa} differs between 1 and 4 threads"));
        }
    }

    let (train, _) = corpus_tables(FeatureConfig::default(), 0.8, SPLIT_SEED);
    let mut r = rng(9);
    let queries: Vec<Vec<f64>> = (0..100)
        .map(|_| {
            let i = r.random_range(0..train.len());
            train.x.row(i).iter().map(|v| v * r.random_range(0.5..1.5)).collect()
        })
        .collect();
    let specs = [
        rf(50, 8),
        ModelSpec::Knn(KnnParams { k: 5, metric: Metric::Euclidean }),
        ModelSpec::Svm(SvmParams::default()),
    ];
    for spec in specs {
        let (m, _) = fit_model(&train, &spec).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: TrainedModel = serde_json::from_str(&json).unwrap();
        let same = queries.iter().all(|q| m.predict_row(q).unwrap() == back.predict_row(q).unwrap());
        if !same || matches!(back.classifier, Classifier::Majority { .. }) {
            bad.push(format!("{} round trip changed predictions", spec.kind()));
        }
    }
    let files = a.len();
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{files} artifacts identical across 3 runs; 3 model kinds round-trip on 100 inputs")
        } else {
            bad.join("; ")
        },
    )
}

// 10

fn random_confusion(r: &mut ChaCha8Rng) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::default();
    for row in cm.counts.iter_mut() {
        for v in row.iter_mut() {
            *v = if r.random_bool(0.2) { 0 } else { r.random_range(0..50) };
        }
    }
    if cm.total() == 0 {
        cm.counts[0][0] = 1;
    }
    cm
}

fn macro_f1_exact(cm: &ConfusionMatrix) -> Ratio<u128> {
    let mut sum = Ratio::from_integer(0u128);
    let mut n = 0u128;
    for c in 0..3 {
        if let Some((num, den)) = cm.f1_fraction(c) {
            sum += Ratio::new(num as u128, den as u128);
            n += 1;
        }
    }
    sum / Ratio::from_integer(n.max(1))
}

fn metric_identities() -> Outcome {
    let mut r = rng(10);
    let mut bad = Vec::new();
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for i in 0..100 {
        let cm = random_confusion(&mut r);
        let total = cm.total() as u128;
        let mut weighted_recall = Ratio::from_integer(0u128);
        for c in 0..3 {
            let support = cm.row_sum(c) as u128;
            if support > 0 {
                weighted_recall +=
                    Ratio::new(support, total) * Ratio::new(cm.counts[c][c] as u128, support);
            }
        }
        let acc = Ratio::new(cm.trace() as u128, total);
        if weighted_recall != acc {
            bad.push(format!("matrix {i}: weighted recall {weighted_recall} vs accuracy {acc}"));
        }
        let rep = eval::report(&cm).unwrap();
        if !close(rep.weighted_avg.recall, rep.accuracy, 1e-12) {
            bad.push(format!("matrix {i}: report weighted recall {} vs accuracy {}", rep.weighted_avg.recall, rep.accuracy));
        }
        let base = macro_f1_exact(&cm);
        for p in perms {
            let pm = cm.permuted(p);
            if macro_f1_exact(&pm) != base || !close(eval::report(&pm).unwrap().macro_avg.f1, rep.macro_avg.f1, 1e-12) {
                bad.push(format!("matrix {i}: macro F1 changed under permutation {p:?}"));
            }
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "100 matrices, 6 permutations each".to_string() } else { bad.join("; ") })
}

#[test]
fn acceptance() {
    type Criterion = (u32, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "physics exactness", Duration::from_secs(1), physics_exactness),
        (2, "derived-feature oracle", Duration::from_secs(1), derived_feature_oracle),
        (3, "classifier oracles", Duration::from_secs(10), classifier_oracles),
        (4, "forest depth trend", Duration::from_secs(30), depth_trend),
        (5, "knn behaviour", Duration::from_secs(20), knn_behaviour),
        (6, "learning-curve overfitting", Duration::from_secs(60), learning_curve_overfit),
        (7, "physics-informed selection", Duration::from_secs(30), physics_informed_selection),
        (8, "svm optimization", Duration::from_secs(10), svm_optimization),
        (9, "determinism and serialization", Duration::from_secs(60), determinism_and_serialization),
        (10, "metric identities", Duration::from_secs(1), metric_identities),
    ];
    let mut failed = Vec::new();
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed();
        let in_time = secs < limit;
        let pass = o.pass && in_time;
        println!(
            "criterion {id:>2} {} {name}: {} ({:.2} s, limit {} s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            secs.as_secs_f64(),
            limit.as_secs()
        );
        if !pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
