use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CellClass, DataError, Dataset, Provenance, Result, SpectralRecord};

/// Exact header of the canonical dataset CSV.
pub const CSV_HEADER: [&str; 6] = [
    "frequency_hz",
    "conductivity_s_per_m",
    "relative_permittivity",
    "reported_tau_s",
    "label",
    "source_id",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Reject rows whose frequency lies outside the corpus envelope instead
    /// of keeping them with a warning.
    pub reject_out_of_envelope: bool,
}

/// A problem with one data row. `line` is the 1-based line in the file
/// (the header is line 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub line: u64,
    pub column: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub dataset: Dataset,
    pub errors: Vec<RowError>,
    pub warnings: Vec<RowError>,
}

/// Reads a dataset CSV from disk.
pub fn ingest_csv(path: impl AsRef<Path>, opts: IngestOptions) -> Result<IngestReport> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io { path: path.display().to_string(), source };
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io_err)?;
    let mut report = ingest_reader(bytes.as_slice(), opts)?;
    report.dataset.provenance.source = path.display().to_string();
    report.dataset.provenance.sha256 = Some(hex::encode(Sha256::digest(&bytes)));
    Ok(report)
}

/// Parses a dataset CSV from any reader. Valid rows are kept in file order;
/// invalid rows are reported individually and skipped.
pub fn ingest_reader<R: Read>(reader: R, opts: IngestOptions) -> Result<IngestReport> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != CSV_HEADER {
        return Err(DataError::Header { expected: CSV_HEADER.join(","), found: found.join(",") });
    }

    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                errors.push(RowError { line, column: None, message: e.to_string() });
                continue;
            }
        };
        match parse_row(&row) {
            Ok(rec) => {
                if let Err((column, message)) = rec.check_values() {
                    errors.push(RowError { line, column: Some(column.into()), message });
                    continue;
                }
                if !rec.in_envelope() {
                    let w = RowError {
                        line,
                        column: Some("frequency_hz".into()),
                        message: format!(
                            "{} Hz lies outside [{}, {}] Hz",
                            rec.frequency,
                            super::FREQ_MIN_HZ,
                            super::FREQ_MAX_HZ
                        ),
                    };
                    if opts.reject_out_of_envelope {
                        errors.push(w);
                        continue;
                    }
                    warnings.push(w);
                }
                records.push(rec);
            }
            Err(e) => errors.push(RowError { line, ..e }),
        }
    }
    let rows = records.len();
    Ok(IngestReport {
        dataset: Dataset { records, provenance: Provenance { source: "<reader>".into(), sha256: None, rows } },
        errors,
        warnings,
    })
}

fn parse_row(row: &csv::StringRecord) -> std::result::Result<SpectralRecord, RowError> {
    if row.len() != CSV_HEADER.len() {
        return Err(RowError {
            line: 0,
            column: None,
            message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
        });
    }
    let num = |j: usize| -> std::result::Result<f64, RowError> {
        let cell = row[j].trim();
        cell.parse::<f64>().map_err(|_| RowError {
            line: 0,
            column: Some(CSV_HEADER[j].into()),
            message: format!("cannot parse `{cell}` as a number"),
        })
    };
    let frequency = num(0)?;
    let conductivity = num(1)?;
    let rel_permittivity = num(2)?;
    let reported_tau = if row[3].trim().is_empty() { None } else { Some(num(3)?) };
    let label = row[4].parse::<CellClass>().map_err(|message| RowError {
        line: 0,
        column: Some(CSV_HEADER[4].into()),
        message,
    })?;
    Ok(SpectralRecord {
        frequency,
        conductivity,
        rel_permittivity,
        reported_tau,
        label,
        source_id: row[5].to_string(),
    })
}

/// Writes the canonical CSV. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in &dataset.records {
        let tau = r.reported_tau.map(|t| t.to_string()).unwrap_or_default();
        w.write_record([
            r.frequency.to_string(),
            r.conductivity.to_string(),
            r.rel_permittivity.to_string(),
            tau,
            r.label.roman().to_string(),
            r.source_id.clone(),
        ])?;
    }
    w.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
    Ok(())
}
