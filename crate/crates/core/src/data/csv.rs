use crate::task::TaskType;
use crate::trainer::Dataset;
use ndarray::Array2;
use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::{DataError, DatasetManifest, TargetColumn};

/// Reads a headered CSV file. Every column except the target must be
/// numeric. Classification labels are encoded in order of first appearance.
pub fn load_csv(manifest: &DatasetManifest, path: &Path) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_csv_from_reader(file, &manifest.target_column, manifest.task)
}

pub fn load_csv_from_reader(
    reader: impl Read,
    target: &TargetColumn,
    task: TaskType,
) -> Result<Dataset, DataError> {
    let mut rdr = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let target_idx = match target {
        TargetColumn::Index(i) if *i < headers.len() => *i,
        TargetColumn::Index(i) => return Err(DataError::MissingTarget(format!("#{i}"))),
        TargetColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingTarget(name.clone()))?,
    };

    let n_features = headers.len() - 1;
    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut labels: HashMap<String, usize> = HashMap::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        if record.len() != headers.len() {
            return Err(DataError::Invalid(format!(
                "row {row} has {} cells, expected {}",
                record.len(),
                headers.len()
            )));
        }
        for (c, cell) in record.iter().enumerate() {
            if c == target_idx {
                continue;
            }
            let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                DataError::NonNumeric {
                    row,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                }
            })?;
            features.push(v);
        }
        let label = &record[target_idx];
        let t = match task {
            TaskType::Classification { .. } => {
                let next = labels.len();
                *labels.entry(label.to_string()).or_insert(next) as f64
            }
            TaskType::Regression => label.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                DataError::NonNumeric {
                    row,
                    column: headers[target_idx].clone(),
                    value: label.to_string(),
                }
            })?,
        };
        targets.push(t);
    }
    if targets.is_empty() {
        return Err(DataError::Invalid("no data rows".into()));
    }
    if let TaskType::Classification { classes } = task {
        if labels.len() != classes {
            return Err(DataError::Invalid(format!(
                "expected {classes} classes, found {} distinct labels",
                labels.len()
            )));
        }
    }
    let features = Array2::from_shape_vec((targets.len(), n_features), features)
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    Ok(Dataset::new(features, targets, task)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_first_appearance() {
        let text = "a,b,label\n1,2,cat\n3,4,dog\n5,6,cat\n";
        let d = load_csv_from_reader(
            text.as_bytes(),
            &TargetColumn::Name("label".into()),
            TaskType::Classification { classes: 2 },
        )
        .unwrap();
        assert_eq!(d.targets, vec![0.0, 1.0, 0.0]);
        assert_eq!(d.features.row(1).to_vec(), vec![3.0, 4.0]);
    }

    #[test]
    fn non_numeric_cell_is_located() {
        let text = "a,b,y\n1,2,0.5\n3,oops,1.5\n";
        let err = load_csv_from_reader(text.as_bytes(), &TargetColumn::Index(2), TaskType::Regression)
            .unwrap_err();
        match err {
            DataError::NonNumeric { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "b", "oops"));
            }
            other => panic!("unexpected error {other}"),
        }
        assert!(load_csv_from_reader(text.as_bytes(), &TargetColumn::Index(2), TaskType::Regression)
            .unwrap_err()
            .to_string()
            .contains("row 2, column `b`"));
    }

    #[test]
    fn missing_target_is_rejected() {
        let text = "a,b\n1,2\n";
        let err = load_csv_from_reader(
            text.as_bytes(),
            &TargetColumn::Name("y".into()),
            TaskType::Regression,
        )
        .unwrap_err();
        assert!(matches!(err, DataError::MissingTarget(_)));
    }
}
