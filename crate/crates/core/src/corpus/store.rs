//! Line-delimited JSON persistence: one report per line, ordered by `(source, id)`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BugReport, Corpus, CorpusError, TimeWindow};

pub fn write_reports<'a, W: Write>(
    mut out: W,
    reports: impl IntoIterator<Item = &'a BugReport>,
) -> Result<(), CorpusError> {
    for report in reports {
        let line = serde_json::to_string(report).map_err(|e| CorpusError::InvalidRecord(e.to_string()))?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_reports<R: Read>(input: R) -> Result<Vec<BugReport>, CorpusError> {
    let mut reports = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let report: BugReport =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse { line: idx + 1, message: e.to_string() })?;
        report.validate().map_err(|e| CorpusError::Parse { line: idx + 1, message: e.to_string() })?;
        reports.push(report);
    }
    Ok(reports)
}

pub fn write_corpus_file(path: &Path, corpus: &Corpus) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    write_reports(BufWriter::new(file), corpus.reports())
}

pub fn read_corpus_file(path: &Path, window: TimeWindow) -> Result<Corpus, CorpusError> {
    let file = File::open(path)?;
    Corpus::from_reports(read_reports(file)?, window)
}
