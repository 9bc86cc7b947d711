#![allow(dead_code)]

use chrono::{DateTime, Utc};
use fptriage::corpus::{BugReport, Comment, DiscussionThread, Source};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn ts(s: &str) -> DateTime<Utc> {
    DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
}

pub fn comment(author: &str, at: &str, is_reporter: bool) -> Comment {
    Comment { author: author.into(), timestamp: ts(at), body: format!("note from {author}"), is_reporter }
}

pub fn bugzilla(id: &str, resolution: Option<&str>, open: &str, comments: Vec<Comment>) -> BugReport {
    BugReport {
        id: id.into(),
        source: Source::Bugzilla,
        title: format!("bugzilla report {id}"),
        description: "observed a problem".into(),
        status: if resolution.is_some() { "RESOLVED".into() } else { "NEW".into() },
        resolution: resolution.map(str::to_string),
        component_raw: "Drivers".into(),
        open_time: ts(open),
        discussions: vec![DiscussionThread::new("0", comments)],
    }
}

pub fn syzkaller(id: &str, status: &str, open: &str, threads: Vec<Vec<Comment>>) -> BugReport {
    BugReport {
        id: id.into(),
        source: Source::Syzkaller,
        title: format!("general protection fault in {id}"),
        description: String::new(),
        status: status.into(),
        resolution: None,
        component_raw: "net".into(),
        open_time: ts(open),
        discussions: threads.into_iter().enumerate().map(|(i, c)| DiscussionThread::new(format!("t{i}"), c)).collect(),
    }
}

pub const WORDS: [&str; 40] = [
    "kernel",
    "panic",
    "oops",
    "usb",
    "hub",
    "ext4",
    "journal",
    "mount",
    "wifi",
    "firmware",
    "driver",
    "suspend",
    "resume",
    "audio",
    "gpu",
    "hang",
    "crash",
    "null",
    "pointer",
    "deref",
    "memory",
    "leak",
    "race",
    "lock",
    "timeout",
    "reset",
    "nvme",
    "disk",
    "boot",
    "acpi",
    "bios",
    "thermal",
    "fan",
    "battery",
    "touchpad",
    "bluetooth",
    "scheduler",
    "cgroup",
    "network",
    "packet",
];

pub fn random_text(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

pub fn text_report(id: &str, title: &str, description: &str, open: &str) -> BugReport {
    let mut r = bugzilla(id, Some("CODE_FIX"), open, vec![]);
    r.title = title.into();
    r.description = description.into();
    r
}
