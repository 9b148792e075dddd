//! CSV dataset ingestion.
//!
//! Expects a header row. The label column is selected by name and mapped
//! to +-1 by the configured positive label. Rows with any empty field are
//! dropped. Columns whose remaining values all parse as numbers become
//! numeric features; everything else is one-hot encoded per distinct
//! value. Standardization happens later, on the train+validation
//! composite only.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::svm::Dataset;

pub fn load_csv(path: &Path, label_column: &str, positive_label: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let fields: Vec<String> = record.iter().map(|f| f.trim().to_string()).collect();
        if fields.iter().any(|f| f.is_empty()) {
            continue; // missing value: drop the row
        }
        rows.push(fields);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }

    let labels: Vec<i8> = rows
        .iter()
        .map(|r| {
            if r[label_idx] == positive_label {
                1
            } else {
                -1
            }
        })
        .collect();

    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != label_idx).collect();
    let mut features: Vec<Vec<f64>> = vec![Vec::new(); rows.len()];
    for &c in &feature_cols {
        let parsed: Option<Vec<f64>> = rows.iter().map(|r| r[c].parse::<f64>().ok()).collect();
        match parsed {
            Some(values) => {
                for (row, v) in features.iter_mut().zip(values) {
                    row.push(v);
                }
            }
            None => {
                // categorical: one indicator column per distinct value
                let distinct: BTreeSet<&str> = rows.iter().map(|r| r[c].as_str()).collect();
                for value in distinct {
                    for (row, r) in features.iter_mut().zip(&rows) {
                        row.push(if r[c] == value { 1.0 } else { 0.0 });
                    }
                }
            }
        }
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "dataset".to_string());
    Dataset::new(features, labels, name)
}
