//! CSV loaders and writers for predictions, labels, features and dataset
//! directories.
//!
//! Predictions: header `class_0,...,class_{k-1}`, one row per instance.
//! Labels: either one-hot columns or a single `label` column of 0-based
//! class indices. Features: numeric columns with a header row.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::shiftsim::LabeledDataset;
use crate::types::{LabelMatrix, Matrix, PredictionMatrix};

pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const FEATURES_FILE: &str = "features.csv";

fn parse_table<R: Read>(reader: R) -> Result<(Vec<String>, Matrix)> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let k = header.len();
    let mut data = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != k {
            return Err(Error::Parse(format!("line {}: expected {k} fields, got {}", i + 2, rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: '{field}' is not a number", i + 2)))?;
            data.push(v);
        }
        n += 1;
    }
    Ok((header, Matrix::new(n, k, data)?))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_predictions_from<R: Read>(reader: R) -> Result<PredictionMatrix> {
    let (_, m) = parse_table(reader)?;
    PredictionMatrix::renormalized(m)
}

pub fn read_predictions(path: &Path) -> Result<PredictionMatrix> {
    read_predictions_from(open(path)?)
}

/// Reads labels in either supported layout. `k` is required to size a
/// `label`-column file whose highest class never occurs; otherwise it is
/// inferred (at least 2).
pub fn read_labels_from<R: Read>(reader: R, k: Option<usize>) -> Result<LabelMatrix> {
    let (header, m) = parse_table(reader)?;
    if header.len() == 1 && header[0] == "label" {
        let mut labels = Vec::with_capacity(m.n());
        for (i, &v) in m.as_slice().iter().enumerate() {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::InvalidLabels(format!("row {i}: {v} is not a class index")));
            }
            labels.push(v as usize);
        }
        let inferred = labels.iter().max().map_or(2, |&l| (l + 1).max(2));
        let k = k.unwrap_or(inferred);
        LabelMatrix::from_labels(labels, k)
    } else {
        let y = LabelMatrix::from_one_hot(&m)?;
        if let Some(k) = k {
            if y.k() != k {
                return Err(Error::DimensionMismatch(format!("labels have {} columns, expected {k}", y.k())));
            }
        }
        Ok(y)
    }
}

pub fn read_labels(path: &Path, k: Option<usize>) -> Result<LabelMatrix> {
    read_labels_from(open(path)?, k)
}

pub fn read_features(path: &Path) -> Result<(Vec<String>, Matrix)> {
    parse_table(open(path)?)
}

pub fn class_header(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("class_{j}")).collect()
}

pub fn write_table<W: Write>(writer: W, header: &[String], m: &Matrix) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header)?;
    for row in m.rows() {
        wtr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_predictions(path: &Path, m: &Matrix) -> Result<()> {
    write_table(fs::File::create(path)?, &class_header(m.k()), m)
}

pub fn write_labels(path: &Path, y: &LabelMatrix) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(fs::File::create(path)?);
    wtr.write_record(["label"])?;
    for &l in y.labels() {
        wtr.write_record([l.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Loads `predictions.csv`, `labels.csv` and the optional `features.csv`.
pub fn load_dataset(dir: &Path) -> Result<LabeledDataset> {
    let predictions = read_predictions(&dir.join(PREDICTIONS_FILE))?;
    let labels = read_labels(&dir.join(LABELS_FILE), Some(predictions.k()))?;
    let features_path = dir.join(FEATURES_FILE);
    let features = if features_path.exists() { Some(read_features(&features_path)?) } else { None };
    match features {
        Some((names, m)) => LabeledDataset::with_features(predictions, labels, m, names),
        None => LabeledDataset::new(predictions, labels),
    }
}

pub fn save_dataset(dir: &Path, ds: &LabeledDataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_predictions(&dir.join(PREDICTIONS_FILE), ds.predictions().matrix())?;
    write_labels(&dir.join(LABELS_FILE), ds.labels())?;
    if let Some(f) = ds.features() {
        write_table(fs::File::create(dir.join(FEATURES_FILE))?, ds.feature_names(), f)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictions_roundtrip_exactly() {
        let p = PredictionMatrix::from_rows(&[vec![0.1, 0.9], vec![1.0 / 3.0, 2.0 / 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_table(&mut buf, &class_header(2), p.matrix()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("class_0,class_1\n"));
        let back = read_predictions_from(buf.as_slice()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn labels_in_both_layouts() {
        let y = read_labels_from("label\n0\n2\n1\n".as_bytes(), None).unwrap();
        assert_eq!(y.labels(), &[0, 2, 1]);
        assert_eq!(y.k(), 3);
        let y = read_labels_from("label\n0\n0\n".as_bytes(), Some(4)).unwrap();
        assert_eq!(y.k(), 4);
        let y = read_labels_from("c0,c1\n1,0\n0,1\n".as_bytes(), None).unwrap();
        assert_eq!(y.labels(), &[0, 1]);
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        assert!(matches!(read_predictions_from("class_0,class_1\n0.5,abc\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_labels_from("label\n0.5\n".as_bytes(), None), Err(Error::InvalidLabels(_))));
    }

    #[test]
    fn near_simplex_rows_are_renormalized() {
        let p = read_predictions_from("class_0,class_1\n0.3333333,0.6666667\n".as_bytes()).unwrap();
        assert!((p.row(0)[0] + p.row(0)[1] - 1.0).abs() < 1e-15);
        assert!(read_predictions_from("class_0,class_1\n0.3,0.6\n".as_bytes()).is_err());
    }
}
