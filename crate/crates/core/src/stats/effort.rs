use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::corpus::{BugReport, Source};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffortMetrics {
    /// Unique comment authors across all threads, reporter included.
    pub participants: usize,
    pub comments: usize,
    pub time_to_close_hours: f64,
}

fn hours(seconds: i64) -> f64 {
    seconds as f64 / 3600.0
}

/// Bugzilla: open time to last comment. Syzkaller: sum over threads of first
/// to last comment. Reports without comments close in zero hours.
pub fn compute_effort(report: &BugReport) -> Result<EffortMetrics, StatsError> {
    if report.comments().any(|c| c.timestamp < report.open_time) {
        return Err(StatsError::NegativeDuration(report.key().to_string()));
    }
    let participants: BTreeSet<&str> = report.comments().map(|c| c.author.as_str()).collect();
    let comments = report.comments().count();
    let seconds: i64 = match report.source {
        Source::Bugzilla => {
            report.comments().map(|c| c.timestamp).max().map_or(0, |last| (last - report.open_time).num_seconds())
        }
        Source::Syzkaller => report
            .discussions
            .iter()
            .filter_map(|t| {
                let first = t.comments.iter().map(|c| c.timestamp).min()?;
                let last = t.comments.iter().map(|c| c.timestamp).max()?;
                Some((last - first).num_seconds())
            })
            .sum(),
    };
    Ok(EffortMetrics { participants: participants.len(), comments, time_to_close_hours: hours(seconds) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;

    #[test]
    fn zero_comments() {
        let r = bugzilla("1", "INVALID", "2021-01-01T00:00:00Z", vec![]);
        let e = compute_effort(&r).unwrap();
        assert_eq!((e.participants, e.comments, e.time_to_close_hours), (0, 0, 0.0));
    }

    #[test]
    fn bugzilla_two_comments() {
        let r = bugzilla(
            "1",
            "INVALID",
            "2021-01-01T00:00:00Z",
            vec![comment("a", "2021-01-01T02:00:00Z", true), comment("b", "2021-01-03T00:00:00Z", false)],
        );
        let e = compute_effort(&r).unwrap();
        assert_eq!((e.participants, e.comments, e.time_to_close_hours), (2, 2, 48.0));
    }

    #[test]
    fn syzkaller_sums_thread_spans() {
        let r = syzkaller(
            "s",
            "invalid",
            "2021-01-01T00:00:00Z",
            vec![
                vec![comment("syzbot", "2021-01-01T00:00:00Z", true), comment("dev", "2021-01-01T10:00:00Z", false)],
                vec![comment("dev", "2021-02-01T00:00:00Z", false), comment("maint", "2021-02-01T05:30:00Z", false)],
                vec![comment("syzbot", "2021-03-01T00:00:00Z", true)],
            ],
        );
        let e = compute_effort(&r).unwrap();
        assert_eq!(e.participants, 3);
        assert_eq!(e.comments, 5);
        assert_eq!(e.time_to_close_hours, 15.5);
    }

    #[test]
    fn comment_before_open_is_rejected() {
        let mut r = bugzilla("1", "INVALID", "2021-01-02T00:00:00Z", vec![]);
        r.discussions[0].comments.push(comment("a", "2021-01-01T00:00:00Z", true));
        assert!(matches!(compute_effort(&r), Err(StatsError::NegativeDuration(_))));
    }
}
