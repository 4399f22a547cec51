//! CSV ingestion and export.

use std::path::Path;

use causal_tradeoff::regression::standardize;
use causal_tradeoff::{Column, Dataset, Roles};

use crate::error::{CliError, CliResult};

/// Reads every column of a headered numeric CSV without transforming it.
pub fn read_csv(path: &Path) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(CliError::Parse {
            row: 1,
            column: String::new(),
            message: "empty header".into(),
        });
    }
    let mut values = vec![Vec::new(); headers.len()];
    for (i, record) in reader.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| CliError::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        if record.len() != headers.len() {
            return Err(CliError::Parse {
                row,
                column: String::new(),
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(CliError::Parse {
                    row,
                    column: headers[j].clone(),
                    message: "blank cell".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| CliError::NonNumeric {
                row,
                column: headers[j].clone(),
                value: cell.to_string(),
            })?;
            values[j].push(v);
        }
    }
    let mut data = Dataset::new();
    for (name, vals) in headers.into_iter().zip(values) {
        data.insert(Column::new(name, vals)?)?;
    }
    Ok(data)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Parse {
            row: 1,
            column: String::new(),
            message: format!("{other:?}"),
        },
    }
}

/// Reads the role columns of a CSV and standardizes them.
pub fn ingest_csv(path: &Path, roles: &Roles) -> CliResult<Dataset> {
    let raw = read_csv(path)?;
    bind_roles(&raw, roles)
}

/// Keeps the role columns of `data`, standardized, in role order.
pub fn bind_roles(data: &Dataset, roles: &Roles) -> CliResult<Dataset> {
    roles.validate(data)?;
    let names = [&roles.outcome, &roles.exposure, &roles.instrument]
        .into_iter()
        .chain(&roles.covariates)
        .chain(&roles.confounder);
    let mut out = Dataset::new();
    for name in names {
        out.insert(standardize(data.get(name)?)?)?;
    }
    Ok(out)
}

/// Renders a dataset as CSV with 17 significant digits per value.
pub fn to_csv(data: &Dataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(data.names()).expect("in-memory write");
    for i in 0..data.n_rows() {
        w.write_record(data.columns().iter().map(|c| format!("{:.16e}", c.values[i])))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}
