use std::path::Path;

use ndarray::Array2;

use super::{impute_column_means, DomainTag, TabularDataset, MISSING};
use crate::{Error, Result};

/// Expected CSV columns: the ordered feature names plus an optional label
/// column, which may sit at any position.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub feature_names: Vec<String>,
    pub label_column: Option<String>,
}

impl CsvSchema {
    pub const LABEL: &'static str = "label";

    pub fn new(feature_names: Vec<String>, label_column: Option<&str>) -> Self {
        Self {
            feature_names,
            label_column: label_column.map(str::to_owned),
        }
    }

    /// Schema taken from a file's header: every column except `label` is a
    /// feature.
    pub fn from_header(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header = reader.headers().map_err(|e| csv_error(path, e))?;
        let has_label = header.iter().any(|h| h == Self::LABEL);
        Ok(Self {
            feature_names: header
                .iter()
                .filter(|h| *h != Self::LABEL)
                .map(str::to_owned)
                .collect(),
            label_column: has_label.then(|| Self::LABEL.to_owned()),
        })
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            path: path.to_owned(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Load a headered CSV. Empty feature cells are imputed with the column mean
/// of the remaining rows. Without a label column the result is tagged as
/// unlabeled target data regardless of `domain`.
pub fn load_csv(path: &Path, schema: &CsvSchema, domain: DomainTag) -> Result<TabularDataset> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();

    let label_pos = match &schema.label_column {
        Some(name) => Some(header.iter().position(|h| h == name).ok_or_else(|| {
            Error::Schema {
                path: path.to_owned(),
                message: format!("label column `{name}` not found"),
            }
        })?),
        None => None,
    };
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&i| Some(i) != label_pos).collect();
    let found: Vec<&str> = feature_cols.iter().map(|&i| header[i].as_str()).collect();
    if found != schema.feature_names.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Schema {
            path: path.to_owned(),
            message: format!(
                "expected feature columns {:?}, found {:?}",
                schema.feature_names, found
            ),
        });
    }

    let dim = feature_cols.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for &c in &feature_cols {
            let cell = record[c].trim();
            if cell.is_empty() {
                values.push(MISSING);
            } else {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    path: path.to_owned(),
                    line,
                    message: format!("column `{}`: cannot parse `{cell}` as a number", header[c]),
                })?;
                values.push(v);
            }
        }
        if let Some(lp) = label_pos {
            let cell = record[lp].trim();
            let label = match cell.parse::<f64>() {
                Ok(0.0) => 0u8,
                Ok(1.0) => 1u8,
                _ => {
                    return Err(Error::Validation(format!(
                        "{}:{line}: label `{cell}` outside {{0,1}}",
                        path.display()
                    )))
                }
            };
            labels.push(label);
        }
    }

    let n = values.len() / dim.max(1);
    let mut x = Array2::from_shape_vec((n, dim), values).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 0,
        message: e.to_string(),
    })?;
    impute_column_means(&mut x);
    match label_pos {
        Some(_) => TabularDataset::new(x, Some(labels), domain, schema.feature_names.clone()),
        None => TabularDataset::new(
            x,
            None,
            DomainTag::TargetUnlabeled,
            schema.feature_names.clone(),
        ),
    }
}

/// Write a dataset as CSV; labeled data gets a trailing `label` column.
pub fn write_csv(data: &TabularDataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    if data.labels().is_some() {
        header.push(CsvSchema::LABEL);
    }
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, row) in data.features().outer_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(labels) = data.labels() {
            fields.push(labels[i].to_string());
        }
        writer.write_record(&fields).map_err(|e| csv_error(path, e))?;
    }
    writer.flush()?;
    Ok(())
}
