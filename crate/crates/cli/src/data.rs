//! Dataset CSV files: a header row, then one column per input followed by
//! one column per target.

use std::path::Path;

use crate::{CliError, CliResult};

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let fail = |msg: String| CliError::Data(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| fail(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        let row = rec
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| fail(format!("row {} has a non-numeric entry", i + 1)))?;
        rows.push(row);
    }
    Ok(Table { header, rows })
}

pub fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))
}

pub fn csv_err(e: csv::Error) -> CliError {
    CliError::Data(e.to_string())
}
