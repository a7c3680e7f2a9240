//! Panel CSV: header `y0,y1,a,l1,...,lp`, one unit per row.

use std::io::{Read, Write};
use std::path::Path;

use cic::{Dataset, Error as CoreError};

use crate::error::CliError;

/// Reads and validates a panel CSV.
pub fn ingest_csv(path: &Path) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_csv(file)
}

pub fn parse_csv<R: Read>(input: R) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = reader.headers().map_err(|e| CliError::Parse { line: 1, message: e.to_string() })?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < 3 || names[..3] != ["y0", "y1", "a"] {
        return Err(CliError::Parse { line: 1, message: format!("header must start with y0,y1,a; got {}", names.join(",")) });
    }
    let p = names.len() - 3;
    for (j, name) in names[3..].iter().enumerate() {
        if *name != format!("l{}", j + 1) {
            return Err(CliError::Parse { line: 1, message: format!("covariate column {} must be named l{}, got `{name}`", j + 1, j + 1) });
        }
    }
    let (mut y0, mut y1, mut a, mut l, mut lines) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |pos| pos.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |pos| pos.line());
        let num = |j: usize| -> Result<f64, CliError> {
            let field = &record[j];
            field.parse::<f64>().map_err(|_| CliError::Parse { line, message: format!("`{}` is not a number: `{field}`", names[j]) })
        };
        y0.push(num(0)?);
        y1.push(num(1)?);
        let av = num(2)?;
        a.push(match av {
            0.0 => 0,
            1.0 => 1,
            value => return Err(CliError::AtLine { line, source: CoreError::NonBinaryTreatment { index: lines.len(), value } }),
        });
        for j in 0..p {
            l.push(num(3 + j)?);
        }
        lines.push(line);
    }
    Dataset::new(y0, y1, a, l, p).map_err(|e| match e {
        CoreError::NonFiniteValue { index, .. } if index < lines.len() => CliError::AtLine { line: lines[index], source: e },
        other => CliError::Core(other),
    })
}

/// Writes a panel with 17 significant digits, so [`parse_csv`] reads it back bit for bit.
pub fn write_csv<W: Write>(data: &Dataset, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut header = vec!["y0".to_string(), "y1".into(), "a".into()];
    header.extend((1..=data.p()).map(|j| format!("l{j}")));
    w.write_record(&header).map_err(io)?;
    for o in data.observations() {
        let mut row = vec![format!("{:.16e}", o.y0), format!("{:.16e}", o.y1), o.a.to_string()];
        row.extend(o.l.iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
