//! CSV and JSON file helpers with line-numbered errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => err.to_string(),
    };
    Error::schema(path, line, message)
}

/// Reads a headed CSV file into typed rows, passing each row and its
/// 1-based line number through `check`.
pub fn read_rows<T, F>(path: &Path, mut check: F) -> Result<Vec<T>>
where
    T: DeserializeOwned,
    F: FnMut(&T, u64) -> std::result::Result<(), String>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut rows = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: T = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::schema(path, line, e.to_string()))?;
        check(&row, line).map_err(|m| Error::schema(path, line, m))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_rows(path, |_, _| Ok(()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::schema(path, e.line() as u64, e.to_string()))
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Deserialize, Serialize, PartialEq)]
    struct Row {
        id: String,
        value: f64,
    }

    #[test]
    fn bad_row_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        std::fs::write(&path, "id,value\na,1.5\nb,oops\n").unwrap();
        let err = read_csv::<Row>(&path).unwrap_err();
        assert!(err.to_string().contains("rows.csv:3"), "{err}");
    }

    #[test]
    fn check_hook_sees_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_csv(
            &path,
            &[
                Row { id: "a".into(), value: 1.0 },
                Row { id: "b".into(), value: -1.0 },
            ],
        )
        .unwrap();
        let err = read_rows::<Row, _>(&path, |r, _| {
            if r.value < 0.0 {
                Err("negative".into())
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert_eq!(err.to_string(), format!("{}:3: negative", path.display()));
    }
}
