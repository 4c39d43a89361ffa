use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::{Record, RecordKind};

/// Tokens and records from a `token,v1,...,vF` file. A first line whose
/// vector fields are not numeric is taken as a header.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Record>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut tokens = Vec::new();
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    let mut width = None;
    for (idx, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(idx + 1, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = row.position().map_or(idx + 1, |p| p.line() as usize);
        if row.len() < 2 {
            return Err(Error::Parse { line, msg: "expected a token and at least one value".into() });
        }
        let parsed: std::result::Result<Vec<f64>, _> = row.iter().skip(1).map(str::parse::<f64>).collect();
        let coords = match parsed {
            Ok(v) => v,
            Err(_) if idx == 0 => continue,
            Err(e) => return Err(Error::Parse { line, msg: e.to_string() }),
        };
        match width {
            None => width = Some(coords.len()),
            Some(w) if w != coords.len() => {
                return Err(Error::Parse { line, msg: format!("expected {w} values, found {}", coords.len()) })
            }
            _ => {}
        }
        let token = row[0].to_string();
        if !seen.insert(token.clone()) {
            return Err(Error::Validation(format!("duplicate token {token:?} on line {line}")));
        }
        records.push(Record::new(records.len(), coords, RecordKind::Embedding));
        tokens.push(token);
    }
    Ok((tokens, records))
}
