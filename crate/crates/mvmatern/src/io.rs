//! CSV loading with cleaning: rows with missing or unparseable fields are
//! dropped, exact duplicates of a (location, component) pair keep their
//! first occurrence, and component labels are indexed alphabetically.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use crate::data::SpatialDataset;
use crate::error::{Error, Result};

/// Which CSV columns hold coordinates, component labels, and responses.
#[derive(Debug, Clone)]
pub struct ColumnSpec {
    pub x_cols: Vec<String>,
    pub component_col: String,
    pub response_col: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        ColumnSpec {
            x_cols: vec!["x".to_string(), "y".to_string()],
            component_col: "comp".to_string(),
            response_col: "value".to_string(),
        }
    }
}

/// A cleaned dataset plus counts of what cleaning removed.
#[derive(Debug)]
pub struct LoadReport {
    pub dataset: SpatialDataset,
    pub rows_read: usize,
    pub dropped_missing: usize,
    pub dropped_duplicates: usize,
}

fn parse_field(field: Option<&str>) -> Option<f64> {
    let text = field?.trim();
    if text.is_empty() {
        return None;
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a CSV file with a header row into a [`SpatialDataset`].
pub fn load_dataset(path: &Path, spec: &ColumnSpec) -> Result<LoadReport> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| Error::Read {
        path: display.clone(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: display.clone(),
            source,
        })?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                name: name.to_string(),
                path: display.clone(),
            })
    };
    let x_idx: Vec<usize> = spec
        .x_cols
        .iter()
        .map(|c| find(c))
        .collect::<Result<_>>()?;
    let comp_idx = find(&spec.component_col)?;
    let value_idx = find(&spec.response_col)?;

    let mut rows_read = 0usize;
    let mut dropped_missing = 0usize;
    let mut dropped_duplicates = 0usize;
    let mut seen: HashSet<(Vec<u64>, String)> = HashSet::new();
    let mut rows: Vec<(Vec<f64>, String, f64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|source| Error::Csv {
            path: display.clone(),
            source,
        })?;
        rows_read += 1;
        let mut location = Vec::with_capacity(x_idx.len());
        let mut complete = true;
        for &i in &x_idx {
            match parse_field(record.get(i)) {
                Some(v) => location.push(v),
                None => {
                    complete = false;
                    break;
                }
            }
        }
        let label = record
            .get(comp_idx)
            .map(str::trim)
            .filter(|s| !s.is_empty());
        let value = parse_field(record.get(value_idx));
        let (label, value) = match (complete, label, value) {
            (true, Some(label), Some(value)) => (label.to_string(), value),
            _ => {
                dropped_missing += 1;
                continue;
            }
        };
        let key = (
            location.iter().map(|v| v.to_bits()).collect(),
            label.clone(),
        );
        if !seen.insert(key) {
            dropped_duplicates += 1;
            continue;
        }
        rows.push((location, label, value));
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset { path: display });
    }

    let labels: BTreeSet<String> = rows.iter().map(|(_, label, _)| label.clone()).collect();
    let labels: Vec<String> = labels.into_iter().collect();
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, label)| (label.as_str(), i))
        .collect();
    let mut locations = Vec::with_capacity(rows.len());
    let mut components = Vec::with_capacity(rows.len());
    let mut responses = Vec::with_capacity(rows.len());
    for (location, label, value) in rows {
        locations.push(location);
        components.push(index[label.as_str()]);
        responses.push(value);
    }
    let dataset = SpatialDataset::new(locations, components, responses, labels)?;
    Ok(LoadReport {
        dataset,
        rows_read,
        dropped_missing,
        dropped_duplicates,
    })
}
