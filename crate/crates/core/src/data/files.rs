//! JSON and CSV artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::instance::MdpInstance;

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn save_instance(path: impl AsRef<Path>, instance: &MdpInstance) -> Result<()> {
    write_json(path, instance)
}

/// Loads and re-checks every instance invariant.
pub fn load_instance(path: impl AsRef<Path>) -> Result<MdpInstance> {
    read_json::<MdpInstance>(path)?.revalidated()
}

/// One row per line, no header, shortest round-trip float formatting.
pub fn write_matrix_csv(path: impl AsRef<Path>, z: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in z {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out: Vec<Vec<f64>> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(out.len() + 1, |p| p.line() as usize);
        let vals = row
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse { line, msg: e.to_string() }))
            .collect::<Result<Vec<_>>>()?;
        out.push(vals);
    }
    if out.is_empty() {
        return Err(invalid("matrix file is empty"));
    }
    Ok(out)
}
