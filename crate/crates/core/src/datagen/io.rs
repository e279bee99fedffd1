use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Writes samples as CSV with a `xi1, xi2, ...` header, one sample per row.
pub fn write_samples_csv(path: &Path, samples: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((1..=samples.ncols()).map(|i| format!("xi{i}")))?;
    for r in 0..samples.nrows() {
        w.write_record(samples.row(r).iter().map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let cols = r.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::Dimension(format!(
                "CSV row {rows} has {} fields, expected {cols}",
                rec.len()
            )));
        }
        for f in rec.iter() {
            data.push(
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("bad number {f:?}: {e}")))?,
            );
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}
