use std::io::{Read, Write};
use std::path::Path;

use super::{DatasetError, Label, LabeledDataset, Provenance, Row};
use crate::manifest::FeatureVector;

/// Loads a CSV whose header is the feature names followed by `label`.
pub fn load_csv(path: &Path) -> Result<LabeledDataset, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, &path.display().to_string())
}

pub fn read_csv<R: Read>(reader: R, path: &str) -> Result<LabeledDataset, DatasetError> {
    let schema = |reason: String| DatasetError::SchemaError {
        path: path.to_string(),
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| schema(e.to_string()))?.clone();
    let cols: Vec<String> = header.iter().map(str::to_string).collect();
    match cols.last() {
        Some(last) if last == "label" && cols.len() >= 2 => {}
        _ => {
            return Err(schema(
                "header must end with a \"label\" column after at least one feature".into(),
            ))
        }
    }
    let feature_names = cols[..cols.len() - 1].to_vec();

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // Row numbers are 1-based data rows; the header is row 0.
        let row_no = i + 1;
        let record = record.map_err(|e| DatasetError::ParseError {
            path: path.to_string(),
            row: row_no,
            column: String::new(),
            reason: e.to_string(),
        })?;
        if record.len() != cols.len() {
            return Err(DatasetError::ParseError {
                path: path.to_string(),
                row: row_no,
                column: String::new(),
                reason: format!("expected {} cells, found {}", cols.len(), record.len()),
            });
        }
        let mut values = Vec::with_capacity(feature_names.len());
        for (j, cell) in record.iter().enumerate().take(feature_names.len()) {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DatasetError::ParseError {
                    path: path.to_string(),
                    row: row_no,
                    column: cols[j].clone(),
                    reason: format!("not a finite number: {cell:?}"),
                })?;
            values.push(v);
        }
        let label = match record.get(cols.len() - 1).unwrap_or("") {
            "0" | "0.0" => Label::Legit,
            "1" | "1.0" => Label::Fraud,
            other => {
                return Err(schema(format!(
                    "row {row_no}: label must be 0 or 1, found {other:?}"
                )))
            }
        };
        rows.push(Row {
            features: FeatureVector(values),
            label,
        });
    }
    LabeledDataset::new(feature_names, rows, Provenance::Csv).map_err(|e| schema(e.to_string()))
}

/// Writes the dataset in the same format [`load_csv`] reads. Floats use the
/// shortest round-trip representation, so output is byte-stable.
pub fn write_csv<W: Write>(ds: &LabeledDataset, writer: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for row in &ds.rows {
        let mut cells: Vec<String> = row
            .features
            .as_slice()
            .iter()
            .map(|v| v.to_string())
            .collect();
        cells.push((row.label as u8).to_string());
        w.write_record(&cells)?;
    }
    w.flush()
}
