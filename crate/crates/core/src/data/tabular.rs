use std::path::Path;

use super::Dataset;
use crate::{Error, Result};

/// Reads a CSV with a header row. The column named `label` holds integer class
/// indices; every other column must be numeric.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let label_col = headers
        .iter()
        .position(|h| h.trim() == "label")
        .ok_or_else(|| Error::Format("CSV has no `label` column".into()))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut row = Vec::with_capacity(rec.len().saturating_sub(1));
        for (col, field) in rec.iter().enumerate() {
            let field = field.trim();
            if col == label_col {
                labels.push(field.parse::<usize>().map_err(|_| {
                    Error::Format(format!("row {}: label `{field}` is not a class index", line + 1))
                })?);
            } else {
                row.push(field.parse::<f64>().map_err(|_| {
                    Error::Format(format!(
                        "row {}, column `{}`: `{field}` is not numeric",
                        line + 1,
                        &headers[col]
                    ))
                })?);
            }
        }
        features.push(row);
    }
    if labels.is_empty() {
        return Err(Error::Empty("CSV dataset"));
    }
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(features, labels, num_classes, format!("csv:{}", path.display()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("CSV: {e}"))
}
