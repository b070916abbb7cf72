//! Measured permittivity spectra in CSV form.

use super::CliError;
use crate::models::PermittivityPoint;
use std::io::Read;

pub const COLUMNS: [&str; 3] = ["omega", "eps_real", "eps_imag"];
pub const MIN_ROWS: usize = 8;

/// Reads `omega,eps_real,eps_imag` rows; '#' starts a comment line.
pub fn read_spectrum<R: Read>(input: R) -> Result<Vec<PermittivityPoint>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("cannot read CSV header: {e}")))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(CliError::Input(format!("empty input; expected header '{}'", COLUMNS.join(","))));
    }
    let mut index = [0usize; 3];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = header.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| {
            CliError::Input(format!(
                "missing column '{name}' in header '{}' (expected {})",
                header.iter().collect::<Vec<_>>().join(","),
                COLUMNS.join(",")
            ))
        })?;
    }
    let mut points: Vec<PermittivityPoint> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(CliError::Input(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        let field = |k: usize| -> Result<f64, CliError> {
            let raw = &record[index[k]];
            let v: f64 = raw
                .parse()
                .map_err(|_| CliError::Input(format!("line {line}: {} value '{raw}' is not a number", COLUMNS[k])))?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("line {line}: {} is not finite", COLUMNS[k])));
            }
            Ok(v)
        };
        let p = PermittivityPoint {
            omega: field(0)?,
            eps_real: field(1)?,
            eps_imag: field(2)?,
        };
        if p.omega <= 0.0 {
            return Err(CliError::Input(format!("line {line}: omega must be positive, got {}", p.omega)));
        }
        if let Some(prev) = points.last() {
            if p.omega <= prev.omega {
                return Err(CliError::Input(format!(
                    "line {line}: omega must increase strictly ({} after {})",
                    p.omega, prev.omega
                )));
            }
        }
        points.push(p);
    }
    if points.len() < MIN_ROWS {
        return Err(CliError::Input(format!(
            "need at least {MIN_ROWS} data rows, found {}",
            points.len()
        )));
    }
    Ok(points)
}

/// CSV text in the input format, for round trips.
pub fn write_spectrum(points: &[PermittivityPoint]) -> String {
    let mut out = format!("{}\n", COLUMNS.join(","));
    for p in points {
        out.push_str(&format!("{:?},{:?},{:?}\n", p.omega, p.eps_real, p.eps_imag));
    }
    out
}
