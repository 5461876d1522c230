//! Csv ingestion and export.
//!
//! Files are utf-8 with a mandatory header row and `.` as the decimal
//! separator. Columns are addressed by name through a [`Schema`]; columns
//! the schema does not mention are ignored. Rows with a non-finite feature
//! or target value are dropped and counted, never imputed.

use std::path::Path;

use indexmap::IndexMap;
use ndarray::{Array1, Array2};

use super::schema::{ColumnRole, Schema};
use super::{DataError, Dataset};

/// What ingestion saw and what it kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestReport {
    pub rows_read: usize,
    /// Rows rejected because a feature or target entry was not finite.
    pub rows_dropped_nonfinite: usize,
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<(Dataset, IngestReport), DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|source| DataError::Csv {
            path: path.display().to_string(),
            source,
        })?;

    let headers = reader
        .headers()
        .map_err(|source| DataError::Csv {
            path: path.display().to_string(),
            source,
        })?
        .clone();
    let header_index = |name: &str| headers.iter().position(|h| h == name);

    // Resolve schema columns against the header, in schema order.
    let mut feature_cols: Vec<(usize, String)> = Vec::new();
    let mut target_col: Option<(usize, String)> = None;
    let mut metadata_cols: Vec<(usize, String)> = Vec::new();
    let mut id_col: Option<usize> = None;
    for (column, role) in &schema.roles {
        let idx = header_index(column).ok_or_else(|| DataError::MissingSchemaColumn {
            column: column.clone(),
        })?;
        match role {
            ColumnRole::Feature => feature_cols.push((idx, column.clone())),
            ColumnRole::Target => target_col = Some((idx, column.clone())),
            ColumnRole::Metadata(name) => metadata_cols.push((idx, name.clone())),
            ColumnRole::Id => id_col = Some(idx),
        }
    }
    let (target_idx, target_name) = target_col.ok_or(DataError::TargetCount { count: 0 })?;

    let parse = |row: usize, column: &str, value: &str| -> Result<f64, DataError> {
        value
            .trim()
            .parse::<f64>()
            .map_err(|_| DataError::ParseCell {
                row,
                column: column.to_string(),
                value: value.to_string(),
            })
    };

    let mut features_flat: Vec<f64> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    let mut metadata: Vec<Vec<f64>> = vec![Vec::new(); metadata_cols.len()];
    let mut ids: Vec<String> = Vec::new();
    let mut rows_read = 0usize;
    let mut dropped = 0usize;

    for (row_index, record) in reader.records().enumerate() {
        let record = record.map_err(|source| DataError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        rows_read += 1;
        // 1-based data row for diagnostics.
        let row = row_index + 1;

        let mut row_features = Vec::with_capacity(feature_cols.len());
        for (idx, name) in &feature_cols {
            row_features.push(parse(row, name, &record[*idx])?);
        }
        let target = parse(row, &target_name, &record[target_idx])?;

        if row_features.iter().any(|v| !v.is_finite()) || !target.is_finite() {
            dropped += 1;
            continue;
        }

        for (slot, (idx, name)) in metadata.iter_mut().zip(&metadata_cols) {
            slot.push(parse(row, name, &record[*idx])?);
        }
        features_flat.extend_from_slice(&row_features);
        targets.push(target);
        ids.push(match id_col {
            Some(idx) => record[idx].to_string(),
            None => row_index.to_string(),
        });
    }

    let n = targets.len();
    let features = Array2::from_shape_vec((n, feature_cols.len()), features_flat)
        .expect("row-major feature buffer matches (n, d)");
    let metadata: IndexMap<String, Array1<f64>> = metadata_cols
        .iter()
        .zip(metadata)
        .map(|((_, name), col)| (name.clone(), Array1::from_vec(col)))
        .collect();

    Ok((
        Dataset {
            feature_names: feature_cols.into_iter().map(|(_, n)| n).collect(),
            features,
            target_name,
            targets: Array1::from_vec(targets),
            metadata,
            ids,
        },
        IngestReport {
            rows_read,
            rows_dropped_nonfinite: dropped,
        },
    ))
}

/// Write a dataset as csv: id column first, then features, target, and
/// metadata in stored order. Floats use Rust's shortest round-trip
/// formatting, so loading and re-writing a table is byte-stable.
pub fn write_csv(d: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_path(path).map_err(|source| DataError::Csv {
        path: path.display().to_string(),
        source,
    })?;

    let mut header: Vec<String> = vec!["id".to_string()];
    header.extend(d.feature_names.iter().cloned());
    header.push(d.target_name.clone());
    header.extend(d.metadata.keys().cloned());
    writer
        .write_record(&header)
        .map_err(|source| DataError::Csv {
            path: path.display().to_string(),
            source,
        })?;

    for i in 0..d.n_samples() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        record.push(d.ids[i].clone());
        for j in 0..d.n_features() {
            record.push(format_float(d.features[[i, j]]));
        }
        record.push(format_float(d.targets[i]));
        for col in d.metadata.values() {
            record.push(format_float(col[i]));
        }
        writer
            .write_record(&record)
            .map_err(|source| DataError::Csv {
                path: path.display().to_string(),
                source,
            })?;
    }
    writer.flush().map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Write the sidecar schema for a table produced by [`write_csv`].
pub fn write_schema(d: &Dataset, path: &Path) -> Result<(), DataError> {
    std::fs::write(path, d.schema().to_json()).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn format_float(v: f64) -> String {
    // Shortest representation that parses back to the same f64.
    format!("{v}")
}
