use thiserror::Error;

use crate::annotate::Label;

#[derive(Debug, Clone, Copy, Error, PartialEq, Eq)]
pub enum ParseFailure {
    #[error("response is empty")]
    Empty,
    #[error("response has no LABEL marker")]
    NoLabel,
    #[error("final LABEL marker names both labels")]
    Ambiguous,
}

/// The line a response must end with.
pub fn render_marker(label: Label) -> String {
    format!("LABEL: {}", label.marker())
}

const NO_EXPLANATION: &str = "(no explanation given)";

/// Labels named on a line of the form `LABEL: ...`, ignoring markdown decoration.
fn marker_labels(line: &str) -> Option<(bool, bool)> {
    let cleaned = line.trim().trim_matches(|c: char| matches!(c, '*' | '#' | '`' | '_' | '>') || c.is_whitespace());
    let head = cleaned.get(..6)?;
    if !head.eq_ignore_ascii_case("label:") {
        return None;
    }
    let rest = cleaned[6..].to_ascii_uppercase().replace([' ', '-'], "_");
    let genuine = rest.contains("GENUINE_BUG");
    let fp = rest.contains("FALSE_POSITIVE");
    (genuine || fp).then_some((genuine, fp))
}

/// Finds the last marker line and returns its label plus every other line as
/// the explanation.
pub fn parse_verdict(raw: &str) -> Result<(Label, String), ParseFailure> {
    if raw.trim().is_empty() {
        return Err(ParseFailure::Empty);
    }
    let lines: Vec<&str> = raw.lines().collect();
    let (idx, (genuine, fp)) = lines
        .iter()
        .enumerate()
        .rev()
        .find_map(|(i, l)| marker_labels(l).map(|m| (i, m)))
        .ok_or(ParseFailure::NoLabel)?;
    let label = match (genuine, fp) {
        (true, true) => return Err(ParseFailure::Ambiguous),
        (true, false) => Label::GenuineBug,
        _ => Label::FalsePositive,
    };
    let explanation: Vec<&str> = lines.iter().enumerate().filter(|(i, _)| *i != idx).map(|(_, l)| *l).collect();
    let explanation = explanation.join("\n").trim().to_string();
    Ok((label, if explanation.is_empty() { NO_EXPLANATION.to_string() } else { explanation }))
}
