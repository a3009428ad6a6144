//! Feature matrices on disk: values as CSV, column metadata in a JSON sidecar
//! next to it (`<file>.meta.json`).

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use super::{ColumnMeta, FeatureMatrix};
use crate::{Error, Matrix, Result};

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_feature_matrix(path: impl AsRef<Path>, features: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record((0..features.cols()).map(|j| format!("f{j}")))?;
    for row in features.values().iter_rows() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let meta_path = sidecar(path);
    let meta = File::create(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    serde_json::to_writer(BufWriter::new(meta), features.column_meta())?;
    Ok(())
}

pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let cols = r.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        for field in rec.iter() {
            data.push(field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: i + 2,
                message: format!("{field:?}: {e}"),
            })?);
        }
        rows += 1;
    }
    let values = Matrix::from_vec(rows, cols, data)?;
    let meta_path = sidecar(path);
    let meta_file = File::open(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Vec<ColumnMeta> = serde_json::from_reader(BufReader::new(meta_file))?;
    if meta.len() != cols {
        return Err(Error::DimensionMismatch {
            expected: cols,
            actual: meta.len(),
        });
    }
    Ok(FeatureMatrix::new(values, meta))
}
