//! Parsing of raw tracker payloads into [`BugReport`]s.
//!
//! Both parsers accept a JSON object. Field aliases cover the Bugzilla REST
//! names (`creation_time`, `creator`, `text`) and the names used by recorded
//! fixtures (`created`, `author`, `body`).
//!
//! Bugzilla payload:
//! `{id, summary|title, description?, status, resolution?, product?, component?,
//!   created|creation_time, creator?, comments: [{creator|author, creation_time|time|timestamp,
//!   text|body, count?, is_reporter?}]}`.
//! Without an explicit `description`, the comment with `count == 0` is taken as
//! the description and removed from the thread.
//!
//! Syzkaller payload:
//! `{id|extid, title, status, subsystems?|component?, created|first_crash,
//!   description?|crash_report?, reporter?, discussions: [{thread_id|subject|link,
//!   messages|comments: [{author, time|timestamp, body?, is_reporter?}]}]}`.
//! The reporter defaults to `syzbot`.

use chrono::{DateTime, NaiveDateTime, Utc};
use serde_json::{Map, Value};

use super::{BugReport, Comment, CorpusError, DiscussionThread, Source};

type Object = Map<String, Value>;

fn as_object(raw: &Value) -> Result<&Object, CorpusError> {
    raw.as_object().ok_or_else(|| CorpusError::InvalidRecord("payload is not a JSON object".into()))
}

fn field<'a>(obj: &'a Object, names: &[&str]) -> Option<&'a Value> {
    names.iter().find_map(|n| obj.get(*n).filter(|v| !v.is_null()))
}

fn text_field(obj: &Object, names: &[&str]) -> Option<String> {
    field(obj, names).map(|v| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    })
}

fn required_text(obj: &Object, names: &[&str]) -> Result<String, CorpusError> {
    text_field(obj, names)
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| CorpusError::MissingField(names[0].to_string()))
}

pub(crate) fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, CorpusError> {
    let s = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(naive.and_utc());
        }
    }
    Err(CorpusError::MalformedTimestamp(raw.to_string()))
}

fn timestamp_field(obj: &Object, names: &[&str]) -> Result<DateTime<Utc>, CorpusError> {
    let raw = field(obj, names).ok_or_else(|| CorpusError::MissingField(names[0].to_string()))?;
    match raw {
        Value::String(s) => parse_timestamp(s),
        other => Err(CorpusError::MalformedTimestamp(other.to_string())),
    }
}

fn array_field<'a>(obj: &'a Object, names: &[&str]) -> Result<&'a [Value], CorpusError> {
    match field(obj, names) {
        None => Ok(&[]),
        Some(Value::Array(items)) => Ok(items),
        Some(_) => Err(CorpusError::InvalidRecord(format!("`{}` must be an array", names[0]))),
    }
}

pub fn ingest_bugzilla(raw: &Value) -> Result<BugReport, CorpusError> {
    let obj = as_object(raw)?;
    let id = required_text(obj, &["id"])?;
    let open_time = timestamp_field(obj, &["created", "creation_time"])?;
    let status = required_text(obj, &["status"])?;
    let resolution = text_field(obj, &["resolution"]).filter(|r| !r.trim().is_empty());
    let creator = text_field(obj, &["creator", "reporter"]);
    let component_raw = match (text_field(obj, &["product"]), text_field(obj, &["component"])) {
        (Some(p), Some(c)) => format!("{p}/{c}"),
        (Some(p), None) => p,
        (None, Some(c)) => c,
        (None, None) => String::new(),
    };

    let mut description = text_field(obj, &["description"]);
    let mut comments = Vec::new();
    for item in array_field(obj, &["comments"])? {
        let c = as_object(item)?;
        let is_description = c.get("count").and_then(Value::as_u64) == Some(0);
        let body = text_field(c, &["text", "body"]).unwrap_or_default();
        if description.is_none() && is_description {
            description = Some(body);
            continue;
        }
        let author = required_text(c, &["creator", "author"])?;
        let timestamp = timestamp_field(c, &["creation_time", "time", "timestamp"])?;
        let is_reporter = c
            .get("is_reporter")
            .and_then(Value::as_bool)
            .unwrap_or_else(|| creator.as_deref() == Some(author.as_str()));
        comments.push(Comment { author, timestamp, body, is_reporter });
    }

    let report = BugReport {
        id,
        source: Source::Bugzilla,
        title: text_field(obj, &["summary", "title"]).unwrap_or_default(),
        description: description.unwrap_or_default(),
        status,
        resolution,
        component_raw,
        open_time,
        discussions: vec![DiscussionThread::new("0", comments)],
    };
    report.validate()?;
    Ok(report)
}

pub fn ingest_syzkaller(raw: &Value) -> Result<BugReport, CorpusError> {
    let obj = as_object(raw)?;
    let id = required_text(obj, &["id", "extid"])?;
    let title = required_text(obj, &["title"])?;
    let status = required_text(obj, &["status"])?;
    let open_time = timestamp_field(obj, &["created", "first_crash"])?;
    let reporter = text_field(obj, &["reporter"]).unwrap_or_else(|| "syzbot".into());
    let component_raw = match field(obj, &["subsystems"]) {
        Some(Value::Array(items)) => items.iter().filter_map(|v| v.as_str()).collect::<Vec<_>>().join(", "),
        _ => text_field(obj, &["component", "subsystem"]).unwrap_or_default(),
    };

    let mut discussions = Vec::new();
    for (idx, item) in array_field(obj, &["discussions"])?.iter().enumerate() {
        let t = as_object(item)?;
        let thread_id = text_field(t, &["thread_id", "subject", "link"]).unwrap_or_else(|| idx.to_string());
        let mut comments = Vec::new();
        for msg in array_field(t, &["messages", "comments"])? {
            let m = as_object(msg)?;
            let author = required_text(m, &["author", "creator"])?;
            let timestamp = timestamp_field(m, &["time", "timestamp", "creation_time"])?;
            let is_reporter = m
                .get("is_reporter")
                .and_then(Value::as_bool)
                .unwrap_or_else(|| author.eq_ignore_ascii_case(&reporter) || author.contains("syzbot"));
            comments.push(Comment {
                author,
                timestamp,
                body: text_field(m, &["body", "text"]).unwrap_or_default(),
                is_reporter,
            });
        }
        discussions.push(DiscussionThread::new(thread_id, comments));
    }

    let report = BugReport {
        id,
        source: Source::Syzkaller,
        title,
        description: text_field(obj, &["description", "crash_report"]).unwrap_or_default(),
        status,
        resolution: text_field(obj, &["resolution"]).filter(|r| !r.trim().is_empty()),
        component_raw,
        open_time,
        discussions,
    };
    report.validate()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn minimal_bugzilla_record() {
        let r = ingest_bugzilla(&json!({
            "id": "1", "status": "RESOLVED", "resolution": "CODE_FIX",
            "created": "2021-03-01T10:00:00Z", "comments": []
        }))
        .unwrap();
        assert_eq!(r.source, Source::Bugzilla);
        assert_eq!(r.discussions.len(), 1);
        assert!(r.discussions[0].comments.is_empty());
        assert_eq!(r.resolution.as_deref(), Some("CODE_FIX"));
    }

    #[test]
    fn bugzilla_comments_are_sorted() {
        let r = ingest_bugzilla(&json!({
            "id": 7, "status": "RESOLVED", "creation_time": "2021-03-01T10:00:00Z", "creator": "alice",
            "comments": [
                {"creator": "bob", "creation_time": "2021-03-03T10:00:00Z", "text": "second"},
                {"creator": "alice", "creation_time": "2021-03-02T10:00:00Z", "text": "first"}
            ]
        }))
        .unwrap();
        assert_eq!(r.id, "7");
        let bodies: Vec<_> = r.comments().map(|c| c.body.as_str()).collect();
        assert_eq!(bodies, ["first", "second"]);
        assert!(r.discussions[0].comments[0].is_reporter);
        assert!(!r.discussions[0].comments[1].is_reporter);
    }

    #[test]
    fn bugzilla_description_comes_from_comment_zero() {
        let r = ingest_bugzilla(&json!({
            "id": "9", "status": "RESOLVED", "created": "2021-03-01T10:00:00Z", "creator": "alice",
            "product": "Drivers", "component": "USB",
            "comments": [
                {"count": 0, "creator": "alice", "creation_time": "2021-03-01T10:00:00Z", "text": "it hangs"},
                {"count": 1, "creator": "dev", "creation_time": "2021-03-02T10:00:00Z", "text": "dmesg?"}
            ]
        }))
        .unwrap();
        assert_eq!(r.description, "it hangs");
        assert_eq!(r.discussions[0].comments.len(), 1);
        assert_eq!(r.component_raw, "Drivers/USB");
    }

    #[test]
    fn bugzilla_missing_creation_time() {
        let err = ingest_bugzilla(&json!({"id": "1", "status": "NEW"})).unwrap_err();
        assert_eq!(err, CorpusError::MissingField("created".into()));
    }

    #[test]
    fn bugzilla_bad_timestamp() {
        let err = ingest_bugzilla(&json!({"id": "1", "status": "NEW", "created": "yesterday"})).unwrap_err();
        assert!(matches!(err, CorpusError::MalformedTimestamp(_)));
    }

    #[test]
    fn syzkaller_threads_are_preserved() {
        let r = ingest_syzkaller(&json!({
            "id": "abc123", "title": "WARNING in foo", "status": "fix bisection done",
            "created": "2022-05-01T00:00:00Z", "subsystems": ["ext4", "fs"],
            "discussions": [
                {"thread_id": "m1", "messages": [{"author": "syzbot", "time": "2022-05-01T00:00:00Z"}]},
                {"thread_id": "m2", "messages": [
                    {"author": "dev@kernel.org", "time": "2022-05-03T00:00:00Z", "body": "fixed by"},
                    {"author": "syzbot", "time": "2022-05-02T00:00:00Z"}
                ]}
            ]
        }))
        .unwrap();
        assert_eq!(r.discussions.len(), 2);
        assert_eq!(r.status, "fix bisection done");
        assert_eq!(r.component_raw, "ext4, fs");
        let second = &r.discussions[1].comments;
        assert!(second[0].is_reporter);
        assert!(!second[1].is_reporter);
    }

    #[test]
    fn syzkaller_without_threads() {
        let r = ingest_syzkaller(&json!({
            "id": "x", "title": "t", "status": "invalid", "created": "2022-05-01T00:00:00Z", "discussions": []
        }))
        .unwrap();
        assert!(r.discussions.is_empty());
    }

    #[test]
    fn syzkaller_requires_title() {
        let err =
            ingest_syzkaller(&json!({"id": "x", "status": "invalid", "created": "2022-05-01T00:00:00Z"})).unwrap_err();
        assert_eq!(err, CorpusError::MissingField("title".into()));
    }

    #[test]
    fn naive_timestamps_are_utc() {
        let t = parse_timestamp("2023-09-01 12:30:00").unwrap();
        assert_eq!(t.to_rfc3339(), "2023-09-01T12:30:00+00:00");
    }
}
