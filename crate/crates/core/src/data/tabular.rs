//! CSV feature tables grouped by a JSON manifest.

use std::collections::BTreeSet;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};
use crate::grouping::GroupManifest;
use crate::matrix::Matrix;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvOptions {
    /// Replace empty / `NA` cells with the column mean.
    pub impute_mean: bool,
    /// Label column name; overrides the manifest's `label`.
    pub label_column: Option<String>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "NaN" | "nan")
}

/// Reads a CSV with a header row. The label column is named by the manifest
/// (or `opts`); every other column is a feature, and the manifest's group
/// columns index those features from 0 in file order.
///
/// Integer labels are used as class indices; any other labels are mapped to
/// classes in sorted order.
pub fn load_csv_with_manifest(data_path: &Path, manifest_path: &Path, opts: &CsvOptions) -> Result<Dataset> {
    let manifest_text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io_at(manifest_path, e))?;
    let manifest: GroupManifest = serde_json::from_str(&manifest_text)?;
    let label_name = opts
        .label_column
        .clone()
        .or_else(|| manifest.label.clone())
        .ok_or_else(|| Error::invalid("no label column named in the manifest or options"))?;

    let file = std::fs::File::open(data_path).map_err(|e| Error::io_at(data_path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(data_path.display().to_string(), e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_col = header.iter().position(|h| *h == label_name).ok_or_else(|| {
        Error::parse(
            manifest_path.display().to_string(),
            format!("label column {label_name:?} not found"),
        )
    })?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h.clone())
        .collect();
    let p = feature_names.len();

    let mut cells: Vec<Option<f64>> = Vec::new();
    let mut raw_labels = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let location = format!("{}:{}", data_path.display(), row_idx + 2);
        let record = record.map_err(|e| Error::parse(&location, e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::parse(
                &location,
                format!("{} cells, header has {}", record.len(), header.len()),
            ));
        }
        for (i, cell) in record.iter().enumerate() {
            if i == label_col {
                raw_labels.push(cell.trim().to_string());
            } else if is_missing(cell) {
                if !opts.impute_mean {
                    return Err(Error::parse(
                        &location,
                        format!("missing value in column {:?}", header[i]),
                    ));
                }
                cells.push(None);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::parse(
                        &location,
                        format!("non-numeric cell {cell:?} in column {:?}", header[i]),
                    )
                })?;
                if !v.is_finite() {
                    return Err(Error::parse(&location, format!("non-finite cell {cell:?}")));
                }
                cells.push(Some(v));
            }
        }
    }
    let n = raw_labels.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }

    let mut means = vec![0.0; p];
    if opts.impute_mean {
        for (c, mean) in means.iter_mut().enumerate() {
            let present: Vec<f64> = (0..n).filter_map(|r| cells[r * p + c]).collect();
            if present.is_empty() {
                return Err(Error::parse(
                    data_path.display().to_string(),
                    format!("column {:?} has no values to impute from", feature_names[c]),
                ));
            }
            *mean = present.iter().sum::<f64>() / present.len() as f64;
        }
    }
    let data: Vec<f64> = cells
        .iter()
        .enumerate()
        .map(|(i, v)| v.unwrap_or(means[i % p]))
        .collect();

    let (labels, num_classes) = encode_labels(&raw_labels);
    let partition = manifest.into_partition(p)?;
    Dataset::new(Matrix::from_vec(n, p, data)?, labels, num_classes, partition)?.with_feature_names(feature_names)
}

fn encode_labels(raw: &[String]) -> (Vec<usize>, usize) {
    if let Ok(ints) = raw
        .iter()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
    {
        let c = ints.iter().max().map_or(2, |&m| (m + 1).max(2));
        return (ints, c);
    }
    let classes: Vec<&String> = raw.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw
        .iter()
        .map(|s| classes.binary_search(&s).expect("label seen"))
        .collect();
    (labels, classes.len().max(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const MANIFEST: &str =
        r#"{"label": "y", "groups": [{"name": "a", "columns": [0]}, {"name": "b", "columns": [1]}]}"#;

    #[test]
    fn three_columns_two_groups() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(dir.path(), "d.csv", "f1,y,f2\n1.5,1,2\n0.5,0,-1\n");
        let man = write(dir.path(), "m.json", MANIFEST);
        let ds = load_csv_with_manifest(&csv, &man, &CsvOptions::default()).unwrap();
        assert_eq!((ds.n(), ds.p()), (2, 2));
        assert_eq!(ds.x().row(0), &[1.5, 2.0]);
        assert_eq!(ds.y(), &[1, 0]);
        assert_eq!(ds.feature_names().unwrap(), &["f1".to_string(), "f2".to_string()]);
    }

    #[test]
    fn manifest_must_cover_every_column() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(dir.path(), "d.csv", "f1,f2,f3,y\n1,2,3,0\n");
        let man = write(dir.path(), "m.json", MANIFEST);
        assert!(matches!(
            load_csv_with_manifest(&csv, &man, &CsvOptions::default()),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn imputation_and_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        let csv = write(dir.path(), "d.csv", "f1,f2,y\n1,,ASD\n3,4,TD\n,8,ASD\n");
        let man = write(dir.path(), "m.json", MANIFEST);
        assert!(matches!(
            load_csv_with_manifest(&csv, &man, &CsvOptions::default()),
            Err(Error::Parse { .. })
        ));
        let opts = CsvOptions {
            impute_mean: true,
            label_column: None,
        };
        let ds = load_csv_with_manifest(&csv, &man, &opts).unwrap();
        assert_eq!(ds.x().row(0), &[1.0, 6.0]);
        assert_eq!(ds.x().row(2), &[2.0, 8.0]);
        assert_eq!(ds.y(), &[0, 1, 0]);
    }

    #[test]
    fn unknown_label_column_and_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        let man = write(dir.path(), "m.json", MANIFEST);
        let csv = write(dir.path(), "d.csv", "f1,f2,label\n1,2,0\n");
        assert!(matches!(
            load_csv_with_manifest(&csv, &man, &CsvOptions::default()),
            Err(Error::Parse { .. })
        ));
        let csv = write(dir.path(), "e.csv", "f1,f2,y\n1,abc,0\n");
        assert!(matches!(
            load_csv_with_manifest(&csv, &man, &CsvOptions::default()),
            Err(Error::Parse { .. })
        ));
    }
}
