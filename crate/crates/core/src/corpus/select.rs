use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{BugReport, Corpus, ReportKey, Source, TimeWindow};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    PotentialGenuine,
    PotentialFalsePositive,
    Excluded(String),
}

impl CandidateKind {
    fn excluded(reason: &str) -> Self {
        CandidateKind::Excluded(reason.to_string())
    }
}

/// Lowercases and collapses separators so `CODE_FIX`, `code-fix` and ` Code Fix ` compare equal.
fn canonical(raw: &str) -> String {
    raw.trim()
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn has_developer_discussion(report: &BugReport) -> bool {
    report.comments().any(|c| !c.is_reporter)
}

fn classify(report: &BugReport, window: &TimeWindow) -> CandidateKind {
    if !window.contains(report.open_time) {
        return CandidateKind::excluded("outside window");
    }
    match report.source {
        Source::Bugzilla => match report.resolution.as_deref().map(canonical).as_deref() {
            Some("code fix") => CandidateKind::PotentialGenuine,
            Some("invalid") => CandidateKind::PotentialFalsePositive,
            _ => CandidateKind::excluded("unresolved or other resolution"),
        },
        Source::Syzkaller => match canonical(&report.status).as_str() {
            "fix bisection done" => CandidateKind::PotentialGenuine,
            "invalid" if has_developer_discussion(report) => CandidateKind::PotentialFalsePositive,
            "invalid" => CandidateKind::excluded("no developer discussion"),
            _ => CandidateKind::excluded("unresolved or other status"),
        },
    }
}

/// Assigns every report in the corpus exactly one candidate kind.
pub fn select_candidates(corpus: &Corpus) -> BTreeMap<ReportKey, CandidateKind> {
    corpus.reports().map(|r| (r.key(), classify(r, &corpus.window))).collect()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn syzkaller_invalid_without_developer_is_excluded() {
        let r = syzkaller(
            "a",
            "invalid",
            "2022-01-01T00:00:00Z",
            vec![vec![comment("syzbot", "2022-01-01T00:00:00Z", true)]],
        );
        let corpus = Corpus::from_reports([r], TimeWindow::default()).unwrap();
        let sel = select_candidates(&corpus);
        assert_eq!(sel.values().next().unwrap(), &CandidateKind::Excluded("no developer discussion".into()));
    }

    #[test]
    fn bugzilla_invalid_is_potential_false_positive() {
        let comments = vec![
            comment("alice", "2022-01-02T00:00:00Z", true),
            comment("dev", "2022-01-03T00:00:00Z", false),
            comment("alice", "2022-01-04T00:00:00Z", true),
        ];
        let r = bugzilla("1", "INVALID", "2022-01-01T00:00:00Z", comments);
        let corpus = Corpus::from_reports([r], TimeWindow::default()).unwrap();
        assert_eq!(select_candidates(&corpus).values().next().unwrap(), &CandidateKind::PotentialFalsePositive);
    }

    #[test]
    fn matching_ignores_case_and_separators() {
        assert_eq!(canonical(" CODE_FIX "), "code fix");
        assert_eq!(canonical("Fix-Bisection  done"), "fix bisection done");
    }

    #[test]
    fn other_resolutions_are_excluded() {
        let r = bugzilla("1", "DUPLICATE", "2022-01-01T00:00:00Z", vec![]);
        let mut unresolved = bugzilla("2", "", "2022-01-01T00:00:00Z", vec![]);
        unresolved.resolution = None;
        let corpus = Corpus::from_reports([r, unresolved], TimeWindow::default()).unwrap();
        for kind in select_candidates(&corpus).values() {
            assert_eq!(kind, &CandidateKind::Excluded("unresolved or other resolution".into()));
        }
    }
}
