//! Bug report data model, tracker ingestion and candidate selection.

mod component;
mod ingest;
mod select;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use component::{normalize_component, Component, ComponentTable, COMPONENT_TABLE_TSV};
pub use ingest::{ingest_bugzilla, ingest_syzkaller};
pub use select::{select_candidates, CandidateKind};
pub use store::{read_corpus_file, read_reports, write_corpus_file, write_reports};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("malformed timestamp `{0}`")]
    MalformedTimestamp(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("duplicate report {0}")]
    DuplicateReport(ReportKey),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for CorpusError {
    fn from(err: std::io::Error) -> Self {
        CorpusError::Io(err.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Bugzilla,
    Syzkaller,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Bugzilla => "bugzilla",
            Source::Syzkaller => "syzkaller",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bugzilla" => Ok(Source::Bugzilla),
            "syzkaller" | "syzbot" => Ok(Source::Syzkaller),
            other => Err(CorpusError::InvalidRecord(format!("unknown source `{other}`"))),
        }
    }
}

/// Identity of a report across trackers, rendered as `source:id`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReportKey {
    pub source: Source,
    pub id: String,
}

impl ReportKey {
    pub fn new(source: Source, id: impl Into<String>) -> Self {
        Self { source, id: id.into() }
    }
}

impl fmt::Display for ReportKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.source, self.id)
    }
}

impl FromStr for ReportKey {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (source, id) =
            s.split_once(':').ok_or_else(|| CorpusError::InvalidRecord(format!("report key `{s}` lacks `source:`")))?;
        if id.is_empty() {
            return Err(CorpusError::InvalidRecord(format!("report key `{s}` has empty id")));
        }
        Ok(ReportKey::new(source.parse()?, id))
    }
}

impl Serialize for ReportKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReportKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub author: String,
    pub timestamp: DateTime<Utc>,
    pub body: String,
    pub is_reporter: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscussionThread {
    pub thread_id: String,
    pub comments: Vec<Comment>,
}

impl DiscussionThread {
    /// Builds a thread, ordering comments by timestamp (stable for equal times).
    pub fn new(thread_id: impl Into<String>, mut comments: Vec<Comment>) -> Self {
        comments.sort_by_key(|c| c.timestamp);
        Self { thread_id: thread_id.into(), comments }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub source: Source,
    pub title: String,
    pub description: String,
    pub status: String,
    pub resolution: Option<String>,
    pub component_raw: String,
    pub open_time: DateTime<Utc>,
    pub discussions: Vec<DiscussionThread>,
}

impl BugReport {
    pub fn key(&self) -> ReportKey {
        ReportKey::new(self.source, self.id.clone())
    }

    pub fn comments(&self) -> impl Iterator<Item = &Comment> {
        self.discussions.iter().flat_map(|t| t.comments.iter())
    }

    /// Title and description joined by a blank line.
    pub fn text(&self) -> String {
        if self.description.is_empty() {
            self.title.clone()
        } else {
            format!("{}\n\n{}", self.title, self.description)
        }
    }

    pub fn component(&self) -> Component {
        normalize_component(&self.component_raw, self.source)
    }

    /// Checks the structural invariants every stored report must satisfy.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.id.trim().is_empty() {
            return Err(CorpusError::MissingField("id".into()));
        }
        if self.source == Source::Bugzilla && self.discussions.len() != 1 {
            return Err(CorpusError::InvalidRecord(format!(
                "bugzilla report {} has {} discussion threads, expected 1",
                self.id,
                self.discussions.len()
            )));
        }
        for thread in &self.discussions {
            if thread.comments.windows(2).any(|w| w[0].timestamp > w[1].timestamp) {
                return Err(CorpusError::InvalidRecord(format!(
                    "thread {} of report {} is not in timestamp order",
                    thread.thread_id, self.id
                )));
            }
            for comment in &thread.comments {
                if comment.author.is_empty() {
                    return Err(CorpusError::InvalidRecord(format!("comment without author in report {}", self.id)));
                }
                if comment.timestamp < self.open_time {
                    return Err(CorpusError::InvalidRecord(format!(
                        "comment at {} predates open time of report {}",
                        comment.timestamp, self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Inclusive UTC window on report open times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl TimeWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start, end }
    }

    /// Contains any instant from `start 00:00:00` through the last instant of `end`.
    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        let d = t.date_naive();
        d >= self.start && d <= self.end
    }

    pub fn start_instant(&self) -> DateTime<Utc> {
        Utc.from_utc_datetime(&self.start.and_hms_opt(0, 0, 0).expect("midnight"))
    }
}

impl Default for TimeWindow {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2025, 7, 31).expect("valid date"),
        }
    }
}

/// A collection of reports keyed by `(source, id)`. Immutable once built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    reports: BTreeMap<ReportKey, BugReport>,
    pub window: TimeWindow,
}

impl Corpus {
    pub fn new(window: TimeWindow) -> Self {
        Self { reports: BTreeMap::new(), window }
    }

    pub fn from_reports(reports: impl IntoIterator<Item = BugReport>, window: TimeWindow) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::new(window);
        for report in reports {
            corpus.insert(report)?;
        }
        Ok(corpus)
    }

    pub fn insert(&mut self, report: BugReport) -> Result<(), CorpusError> {
        report.validate()?;
        let key = report.key();
        if self.reports.contains_key(&key) {
            return Err(CorpusError::DuplicateReport(key));
        }
        self.reports.insert(key, report);
        Ok(())
    }

    /// Inserts or replaces, used when merging a fresh ingestion into an existing file.
    pub fn upsert(&mut self, report: BugReport) -> Result<(), CorpusError> {
        report.validate()?;
        self.reports.insert(report.key(), report);
        Ok(())
    }

    pub fn get(&self, key: &ReportKey) -> Option<&BugReport> {
        self.reports.get(key)
    }

    pub fn reports(&self) -> impl Iterator<Item = &BugReport> {
        self.reports.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = &ReportKey> {
        self.reports.keys()
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn report_key_round_trips_through_text() {
        let key = ReportKey::new(Source::Syzkaller, "abc:def");
        let parsed: ReportKey = key.to_string().parse().unwrap();
        assert_eq!(parsed, key);
        assert!("nosource".parse::<ReportKey>().is_err());
        assert!("bugzilla:".parse::<ReportKey>().is_err());
    }

    #[test]
    fn window_endpoints_are_inclusive() {
        let w = TimeWindow::default();
        assert!(w.contains(ts("2020-01-01T00:00:00Z")));
        assert!(w.contains(ts("2025-07-31T23:59:59Z")));
        assert!(!w.contains(ts("2019-12-31T23:59:59Z")));
        assert!(!w.contains(ts("2025-08-01T00:00:00Z")));
    }

    #[test]
    fn corpus_rejects_duplicates_and_bad_reports() {
        let mut corpus = Corpus::default();
        corpus.insert(bugzilla("1", "CODE_FIX", "2021-01-01T00:00:00Z", vec![])).unwrap();
        let dup = corpus.insert(bugzilla("1", "INVALID", "2021-01-01T00:00:00Z", vec![]));
        assert!(matches!(dup, Err(CorpusError::DuplicateReport(_))));

        let early =
            bugzilla("2", "CODE_FIX", "2021-01-02T00:00:00Z", vec![comment("dev", "2021-01-01T00:00:00Z", false)]);
        assert!(corpus.insert(early).is_err());

        let mut two_threads = bugzilla("3", "CODE_FIX", "2021-01-01T00:00:00Z", vec![]);
        two_threads.discussions.push(DiscussionThread::new("1", vec![]));
        assert!(corpus.insert(two_threads).is_err());
    }
}
