//! The `dielml` command line: generate, ingest-check, train, sweep, report.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O or input-data error,
//! 4 learning error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{self, CellClass, DataError, Dataset, GeneratorSpec, IngestOptions, SplitSpec};
use crate::eval::{self, EvalError, EvaluationReport};
use crate::learn::{fit_model, LearnError, ModelSpec};
use crate::pipeline::{self, FeatureConfig, PipelineConfig, PipelineError, RunReport};
use crate::SCHEMA_VERSION;

#[derive(Debug, Parser)]
#[command(name = "dielml", version, about = "Dielectric-spectroscopy cell classification")]
pub struct Cli {
    /// Overrides every seed in the loaded configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON configuration for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// off, error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corpus CSV.
    Generate {
        /// Output file; defaults to `<output-dir>/dataset.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a dataset CSV and summarize it.
    IngestCheck {
        dataset: PathBuf,
        #[arg(long)]
        reject_out_of_envelope: bool,
    },
    /// Fit one model; writes model.json, report.json and manifest.json.
    Train { dataset: PathBuf },
    /// Run a hyperparameter grid; writes sweep.csv.
    Sweep { dataset: PathBuf },
    /// Print a report JSON as a table and write its plot-data CSVs.
    Report { report: PathBuf },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Io(String),
    #[error("learning error: {0}")]
    Learn(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Learn(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } | DataError::Csv(_) | DataError::Header { .. } => CliError::Io(e.to_string()),
            DataError::InvalidSplit(_) | DataError::InvalidGenerator(_) => CliError::Config(e.to_string()),
            _ => CliError::Learn(e.to_string()),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::InvalidParams(_) => CliError::Config(e.to_string()),
            LearnError::Data(d) => d.into(),
            _ => CliError::Learn(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidFolds(_) | EvalError::InvalidGrid(_) => CliError::Config(e.to_string()),
            EvalError::Learn(l) => l.into(),
            EvalError::Io(_) | EvalError::Csv(_) => CliError::Io(e.to_string()),
            _ => CliError::Learn(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidThreshold(_) | PipelineError::InvalidFeatures => CliError::Config(e.to_string()),
            PipelineError::Data(d) => d.into(),
            PipelineError::Learn(l) => l.into(),
            PipelineError::Eval(v) => v.into(),
            _ => CliError::Learn(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    check_schema(&v, path)?;
    Ok(v)
}

/// Refuses documents written by a newer schema than this build understands.
fn check_schema(v: &Value, path: &Path) -> Result<()> {
    if let Some(found) = v.get("schema_version").and_then(Value::as_u64) {
        if found > SCHEMA_VERSION as u64 {
            return Err(CliError::Config(format!(
                "{}: schema_version {found} is newer than supported version {SCHEMA_VERSION}",
                path.display()
            )));
        }
    }
    Ok(())
}

fn parse<T: serde::de::DeserializeOwned>(v: Value, path: &Path) -> Result<T> {
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match cli.threads {
        Some(0) => Err(CliError::Config("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { out } => cmd_generate(cli, out.as_deref()),
        Command::IngestCheck { dataset, reject_out_of_envelope } => {
            cmd_ingest_check(dataset, IngestOptions { reject_out_of_envelope: *reject_out_of_envelope })
        }
        Command::Train { dataset } => cmd_train(cli, dataset),
        Command::Sweep { dataset } => cmd_sweep(cli, dataset),
        Command::Report { report } => cmd_report(cli, report),
    }
}

pub fn cmd_generate(cli: &Cli, out: Option<&Path>) -> Result<()> {
    let mut spec = match &cli.config {
        Some(p) => parse::<GeneratorSpec>(read_json(p)?, p)?,
        None => GeneratorSpec::default(),
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    let d = data::generate(&spec)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| cli.output_dir.join("dataset.csv"));
    let mut buf = Vec::new();
    data::write_csv(&d, &mut buf)?;
    write_file(&path, &buf)?;
    let counts = d.class_counts();
    for c in CellClass::ALL {
        println!("{:<4}{:>6}", c.roman(), counts[c.index()]);
    }
    println!("{:<4}{:>6}", "all", d.len());
    println!("wrote {}", path.display());
    Ok(())
}

fn load_dataset(path: &Path, opts: IngestOptions) -> Result<Dataset> {
    let r = data::ingest_csv(path, opts)?;
    for w in &r.warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.message);
    }
    if !r.errors.is_empty() {
        for e in &r.errors {
            eprintln!("{}:{}: {}: {}", path.display(), e.line, e.column.as_deref().unwrap_or("-"), e.message);
        }
        return Err(CliError::Io(format!("{}: {} invalid row(s)", path.display(), r.errors.len())));
    }
    Ok(r.dataset)
}

pub fn cmd_ingest_check(path: &Path, opts: IngestOptions) -> Result<()> {
    let r = data::ingest_csv(path, opts)?;
    let d = &r.dataset;
    println!("file      {}", path.display());
    println!("sha256    {}", d.provenance.sha256.as_deref().unwrap_or("-"));
    println!("rows      {}", d.len());
    let counts = d.class_counts();
    for c in CellClass::ALL {
        let f: Vec<f64> = d.records.iter().filter(|r| r.label == c).map(|r| r.rel_permittivity).collect();
        let med = data::median(&f).map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into());
        println!("class {:<4}{:>5} rows, median relative permittivity {med}", c.roman(), counts[c.index()]);
    }
    for w in &r.warnings {
        println!("warning line {}: {}: {}", w.line, w.column.as_deref().unwrap_or("-"), w.message);
    }
    for e in &r.errors {
        println!("error line {}: {}: {}", e.line, e.column.as_deref().unwrap_or("-"), e.message);
    }
    if r.errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{} invalid row(s)", r.errors.len())))
    }
}

/// Everything needed to repeat a `train` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub input: InputFile,
    pub config: PipelineConfig,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: Option<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub train_accuracy: f64,
}

/// Reads a pipeline configuration, or the configuration inside a manifest.
fn load_pipeline_config(path: &Path) -> Result<PipelineConfig> {
    let v = read_json(path)?;
    match v.get("config") {
        Some(inner) if v.get("input").is_some() => {
            check_schema(inner, path)?;
            parse(inner.clone(), path)
        }
        _ => parse(v, path),
    }
}

pub fn cmd_train(cli: &Cli, dataset: &Path) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => load_pipeline_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    cfg.validate()?;
    let d = load_dataset(dataset, IngestOptions::default())?;
    let out = pipeline::run(&d, &cfg)?;
    let r = &out.report;

    let dir = &cli.output_dir;
    write_file(&dir.join("model.json"), &to_json(&out.model))?;
    write_file(&dir.join("report.json"), &to_json(r))?;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        input: InputFile {
            path: dataset.display().to_string(),
            sha256: d.provenance.sha256.clone(),
            rows: d.len(),
        },
        seed: cfg.split.seed,
        config: cfg,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|t| t.as_secs()).unwrap_or(0),
        metrics: RunMetrics {
            accuracy: r.evaluation.accuracy,
            macro_f1: r.evaluation.macro_avg.f1,
            train_accuracy: r.train_accuracy,
        },
    };
    write_file(&dir.join("manifest.json"), &to_json(&manifest))?;
    println!(
        "{} on {} features: test accuracy {:.4}, macro F1 {:.4}, train accuracy {:.4}",
        r.model_kind,
        r.retained_features.len(),
        r.evaluation.accuracy,
        r.evaluation.macro_avg.f1,
        r.train_accuracy
    );
    if !r.excluded.is_empty() {
        println!("{} record(s) excluded during featurization", r.excluded.len());
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// Hyperparameter grid over one model kind.
///
/// `grid` maps parameter names of the model's JSON form to candidate
/// values. Runs enumerate the cartesian product with parameter names in
/// sorted order, the last name varying fastest, and each point is repeated
/// `repetitions` times with seeds `seed, seed + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default = "crate::schema_version")]
    pub schema_version: u32,
    /// `random_forest`, `knn` or `svm`.
    pub model: String,
    /// Parameters shared by every run, merged under the grid values.
    #[serde(default)]
    pub base: BTreeMap<String, Value>,
    pub grid: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
}

fn one() -> usize {
    1
}

/// One resolved grid run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub repetition: usize,
    pub seed: u64,
    pub values: Vec<Value>,
    pub spec: ModelSpec,
}

impl SweepSpec {
    pub fn total_runs(&self) -> usize {
        self.grid.values().map(Vec::len).product::<usize>() * self.repetitions
    }

    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        if !matches!(self.model.as_str(), "random_forest" | "knn" | "svm") {
            return Err(CliError::Config(format!("unknown model kind `{}`", self.model)));
        }
        if self.grid.is_empty() || self.grid.values().any(Vec::is_empty) {
            return Err(CliError::Config("sweep grid must have at least one value per parameter".into()));
        }
        if self.repetitions == 0 {
            return Err(CliError::Config("repetitions must be >= 1".into()));
        }
        let names: Vec<&String> = self.grid.keys().collect();
        let mut combos: Vec<Vec<Value>> = vec![vec![]];
        for name in &names {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    self.grid[*name].iter().map(move |v| {
                        let mut c = c.clone();
                        c.push(v.clone());
                        c
                    })
                })
                .collect();
        }
        let mut out = Vec::with_capacity(self.total_runs());
        for values in combos {
            for repetition in 0..self.repetitions {
                let seed = self.seed.wrapping_add(repetition as u64);
                let mut obj = serde_json::Map::new();
                obj.insert("kind".into(), Value::String(self.model.clone()));
                if self.model == "random_forest" {
                    obj.insert("n_estimators".into(), 100.into());
                    obj.insert("max_depth".into(), 10.into());
                    obj.insert("seed".into(), seed.into());
                }
                if self.model == "knn" {
                    obj.insert("k".into(), 5.into());
                }
                if self.model == "svm" {
                    let d = serde_json::to_value(crate::learn::SvmParams::default()).expect("serializable");
                    obj.extend(d.as_object().expect("object").clone());
                }
                for (k, v) in &self.base {
                    obj.insert(k.clone(), v.clone());
                }
                for (k, v) in names.iter().zip(&values) {
                    obj.insert((*k).clone(), v.clone());
                }
                let spec: ModelSpec = serde_json::from_value(Value::Object(obj))
                    .map_err(|e| CliError::Config(format!("grid point {values:?}: {e}")))?;
                out.push(SweepPoint { repetition, seed, values: values.clone(), spec });
            }
        }
        Ok(out)
    }
}

struct SweepRow {
    report: EvaluationReport,
    train_accuracy: f64,
    wall_time_s: f64,
}

fn sweep_one(d: &Dataset, spec: &SweepSpec, p: &SweepPoint) -> Result<SweepRow> {
    let start = Instant::now();
    let feats = pipeline::featurize(d, &spec.features)?;
    let split = SplitSpec { seed: p.seed, ..spec.split };
    let (tr, te) = data::split_indices(&feats.table.y, &split)?;
    let (train, test) = (feats.table.subset(&tr), feats.table.subset(&te));
    let (model, _) = fit_model(&train, &p.spec)?;
    let report = eval::evaluate(&model, &test)?;
    let train_accuracy = eval::evaluate(&model, &train)?.accuracy;
    Ok(SweepRow { report, train_accuracy, wall_time_s: start.elapsed().as_secs_f64() })
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn sweep_header(spec: &SweepSpec) -> Vec<String> {
    let mut h: Vec<String> = vec!["run".into(), "repetition".into(), "seed".into()];
    h.extend(spec.grid.keys().cloned());
    h.extend(["accuracy", "macro_precision", "macro_recall", "macro_f1"].map(String::from));
    for c in CellClass::ALL {
        for m in ["precision", "recall", "f1"] {
            h.push(format!("{m}_{}", c.roman()));
        }
    }
    h.extend(["train_accuracy", "wall_time_s"].map(String::from));
    h
}

pub fn cmd_sweep(cli: &Cli, dataset: &Path) -> Result<()> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Config("sweep requires --config".into()))?;
    let mut spec: SweepSpec = parse(read_json(path)?, path)?;
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    let points = spec.points()?;
    let d = load_dataset(dataset, IngestOptions::default())?;
    let rows: Vec<Result<SweepRow>> = points.par_iter().map(|p| sweep_one(&d, &spec, p)).collect();

    let out_path = cli.output_dir.join("sweep.csv");
    fs::create_dir_all(&cli.output_dir).map_err(|e| io_err(&cli.output_dir, e))?;
    let file = fs::File::create(&out_path).map_err(|e| io_err(&out_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| io_err(&out_path, e);
    w.write_record(sweep_header(&spec)).map_err(csv_err)?;
    for (i, (p, row)) in points.iter().zip(rows).enumerate() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                w.flush().map_err(|e| io_err(&out_path, e))?;
                eprintln!("run {i} failed; {i} completed row(s) kept in {}", out_path.display());
                return Err(e);
            }
        };
        let r = &row.report;
        let mut rec = vec![i.to_string(), p.repetition.to_string(), p.seed.to_string()];
        rec.extend(p.values.iter().map(cell));
        rec.extend(
            [r.accuracy, r.macro_avg.precision, r.macro_avg.recall, r.macro_avg.f1].map(|x| x.to_string()),
        );
        for m in &r.per_class {
            rec.extend([m.precision, m.recall, m.f1].map(|x| x.to_string()));
        }
        rec.push(row.train_accuracy.to_string());
        rec.push(format!("{:.6}", row.wall_time_s));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| io_err(&out_path, e))?;
    println!("{} run(s) written to {}", points.len(), out_path.display());
    Ok(())
}

/// Classification table: one row per class, then accuracy and the two
/// averages.
pub fn format_table(r: &EvaluationReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("{:<14}{:>10}{:>10}{:>10}{:>10}\n", "", "precision", "recall", "f1-score", "support"));
    for m in &r.per_class {
        let label = format!("{} {}", m.class.roman(), m.class.name());
        s.push_str(&format!(
            "{label:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}\n",
            m.precision, m.recall, m.f1, m.support
        ));
    }
    s.push('\n');
    s.push_str(&format!("{:<14}{:>10}{:>10}{:>10.2}{:>10}\n", "accuracy", "", "", r.accuracy, r.total));
    for (name, a) in [("macro avg", r.macro_avg), ("weighted avg", r.weighted_avg)] {
        s.push_str(&format!(
            "{name:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}\n",
            a.precision, a.recall, a.f1, r.total
        ));
    }
    s
}

pub fn cmd_report(cli: &Cli, path: &Path) -> Result<()> {
    let r: RunReport = parse(read_json(path)?, path)?;
    print!("{}", format_table(&r.evaluation));
    println!("retained features: {}", r.retained_features.join(", "));

    let dir = &cli.output_dir;
    let mut buf = Vec::new();
    eval::write_confusion_csv(&r.evaluation.confusion, &mut buf)?;
    write_file(&dir.join("confusion.csv"), &buf)?;

    let mut buf = Vec::new();
    eval::write_report_csv(&r.evaluation, &mut buf)?;
    write_file(&dir.join("per_class.csv"), &buf)?;

    match &r.importances {
        Some(imp) => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let e = |e: csv::Error| CliError::Io(e.to_string());
            w.write_record(["feature", "importance"]).map_err(e)?;
            for (f, x) in imp.features.iter().zip(&imp.weights) {
                w.write_record([f.clone(), x.to_string()]).map_err(e)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&dir.join("importances.csv"), &bytes)?;
        }
        None => println!("no feature importances in report; importances.csv not written"),
    }
    match &r.learning_curve {
        Some(lc) => {
            let mut buf = Vec::new();
            eval::write_curve_csv(lc, &mut buf)?;
            write_file(&dir.join("learning_curve.csv"), &buf)?;
        }
        None => println!("no learning curve in report; learning_curve.csv not written"),
    }
    Ok(())
}

/// Flushes stdout, ignoring a closed pipe.
pub fn flush_stdout() {
    let _ = std::io::stdout().flush();
}
