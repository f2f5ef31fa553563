//! Dataset schema, ingestion, standardization, splitting and the synthetic
//! Cole-Cole corpus generator.

mod csv_io;
mod generator;
mod matrix;
mod split;
mod standardize;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{ingest_csv, ingest_reader, write_csv, IngestOptions, IngestReport, RowError, CSV_HEADER};
pub use generator::{generate, ClassProfile, GeneratorSpec, ValueRange};
pub use matrix::{FeatureTable, Matrix};
pub use split::{split, split_indices, SplitSpec};
pub use standardize::{fit_standardizer, StandardizationParams};

/// Lower edge of the frequency envelope covered by the corpus, Hz.
pub const FREQ_MIN_HZ: f64 = 1.5e5;
/// Upper edge of the frequency envelope covered by the corpus, Hz.
pub const FREQ_MAX_HZ: f64 = 2e10;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("feature `{feature}` has zero variance")]
    ZeroVariance { feature: String },
    #[error("class {class} has {count} record(s); stratified splitting needs at least {needed}")]
    InsufficientClass {
        class: CellClass,
        count: usize,
        needed: usize,
    },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid generator spec: {0}")]
    InvalidGenerator(String),
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("empty dataset")]
    Empty,
    #[error(transparent)]
    Physics(#[from] crate::physics::PhysicsError),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Cell state. Ordinal codes 1, 2, 3 are fixed for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellClass {
    #[serde(rename = "I")]
    Normal,
    #[serde(rename = "II")]
    Benign,
    #[serde(rename = "III")]
    Malignant,
}

impl CellClass {
    pub const ALL: [CellClass; 3] = [CellClass::Normal, CellClass::Benign, CellClass::Malignant];
    pub const COUNT: usize = 3;

    /// Zero-based index, used for array slots.
    pub fn index(self) -> usize {
        match self {
            CellClass::Normal => 0,
            CellClass::Benign => 1,
            CellClass::Malignant => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<CellClass> {
        CellClass::ALL.get(i).copied()
    }

    /// Reporting ordinal: 1, 2 or 3.
    pub fn ordinal(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn roman(self) -> &'static str {
        match self {
            CellClass::Normal => "I",
            CellClass::Benign => "II",
            CellClass::Malignant => "III",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellClass::Normal => "normal",
            CellClass::Benign => "benign",
            CellClass::Malignant => "malignant",
        }
    }
}

impl fmt::Display for CellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

impl FromStr for CellClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "I" => Ok(CellClass::Normal),
            "II" => Ok(CellClass::Benign),
            "III" => Ok(CellClass::Malignant),
            other => Err(format!("unknown label `{other}` (expected I, II or III)")),
        }
    }
}

/// One measured row of the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRecord {
    /// Hz
    pub frequency: f64,
    /// S/m
    pub conductivity: f64,
    pub rel_permittivity: f64,
    /// Relaxation time constant as reported by the source, s.
    pub reported_tau: Option<f64>,
    pub label: CellClass,
    pub source_id: String,
}

impl SpectralRecord {
    /// Checks the value invariants that do not depend on the frequency envelope.
    pub fn check_values(&self) -> std::result::Result<(), (&'static str, String)> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(("frequency_hz", format!("{} is not a finite positive frequency", self.frequency)));
        }
        if !(self.conductivity.is_finite() && self.conductivity >= 0.0) {
            return Err((
                "conductivity_s_per_m",
                format!("{} is not a finite non-negative conductivity", self.conductivity),
            ));
        }
        if !(self.rel_permittivity.is_finite() && self.rel_permittivity > 0.0) {
            return Err((
                "relative_permittivity",
                format!("{} is not a finite positive permittivity", self.rel_permittivity),
            ));
        }
        if let Some(t) = self.reported_tau {
            if !(t.is_finite() && t > 0.0) {
                return Err(("reported_tau_s", format!("{t} is not a finite positive time")));
            }
        }
        Ok(())
    }

    pub fn in_envelope(&self) -> bool {
        (FREQ_MIN_HZ..=FREQ_MAX_HZ).contains(&self.frequency)
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    /// Hex SHA-256 of the ingested bytes, when read from a file.
    pub sha256: Option<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub records: Vec<SpectralRecord>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(records: Vec<SpectralRecord>, source: impl Into<String>) -> Self {
        let rows = records.len();
        Dataset {
            records,
            provenance: Provenance { source: source.into(), sha256: None, rows },
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<CellClass> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Records per class, indexed by `CellClass::index`.
    pub fn class_counts(&self) -> [usize; 3] {
        class_counts(self.records.iter().map(|r| r.label))
    }

    /// Subset by record index, in the given order.
    pub fn select(&self, indices: &[usize], tag: &str) -> Dataset {
        let records: Vec<_> = indices.iter().map(|&i| self.records[i].clone()).collect();
        let rows = records.len();
        Dataset {
            records,
            provenance: Provenance {
                source: format!("{}#{}", self.provenance.source, tag),
                sha256: self.provenance.sha256.clone(),
                rows,
            },
        }
    }
}

pub fn class_counts(labels: impl IntoIterator<Item = CellClass>) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    counts
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
