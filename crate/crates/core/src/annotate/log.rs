//! Append-only line-delimited JSON logs (verdicts, pre-labels, label files).

use std::io::{BufRead, BufReader, Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::AnnotateError;

pub fn write_jsonl<'a, T: Serialize + 'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), AnnotateError> {
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| AnnotateError::Io(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>, AnnotateError> {
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| AnnotateError::Parse { line: idx + 1, message: e.to_string() })?,
        );
    }
    Ok(records)
}
