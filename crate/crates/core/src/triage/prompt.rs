use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TriageError;
use crate::annotate::Label;
use crate::corpus::BugReport;
use crate::retrieval::RetrievedCase;

pub const REPORT_BEGIN: &str = "=== BEGIN REPORT ===";
pub const REPORT_END: &str = "=== END REPORT ===";

/// Step headers every chain-of-thought prompt carries.
pub const COT_HEADERS: [&str; 4] =
    ["Component analysis", "Dependency check", "Feature interpretation", "Integrative decision"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStrategy {
    BasicZeroShot,
    EnhancedZeroShot,
    FewShot,
    #[serde(rename = "cot")]
    ChainOfThought,
    #[serde(rename = "rag")]
    Rag,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 5] = [
        PromptStrategy::BasicZeroShot,
        PromptStrategy::EnhancedZeroShot,
        PromptStrategy::FewShot,
        PromptStrategy::ChainOfThought,
        PromptStrategy::Rag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptStrategy::BasicZeroShot => "basic-zero-shot",
            PromptStrategy::EnhancedZeroShot => "enhanced-zero-shot",
            PromptStrategy::FewShot => "few-shot",
            PromptStrategy::ChainOfThought => "cot",
            PromptStrategy::Rag => "rag",
        }
    }

    fn template_file(self) -> &'static str {
        match self {
            PromptStrategy::BasicZeroShot => "basic_zero_shot.txt",
            PromptStrategy::EnhancedZeroShot => "enhanced_zero_shot.txt",
            PromptStrategy::FewShot => "few_shot.txt",
            PromptStrategy::ChainOfThought => "cot.txt",
            PromptStrategy::Rag => "rag.txt",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PromptStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptStrategy::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// An annotated example report shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    #[serde(default)]
    pub id: String,
    pub text: String,
    pub label: Label,
    pub rationale: String,
}

const SHIPPED_EXEMPLARS: &str = include_str!("../../data/fewshot_exemplars.jsonl");

/// The default genuine/false-positive exemplar pair.
pub fn default_exemplars() -> Vec<Exemplar> {
    SHIPPED_EXEMPLARS
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("shipped exemplars are valid"))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriageContext {
    pub guidelines: Option<String>,
    pub exemplars: Option<Vec<Exemplar>>,
    pub retrieved: Option<Vec<RetrievedCase>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub strategy: PromptStrategy,
    pub system_text: String,
    pub user_text: String,
    pub exemplars: Vec<Exemplar>,
    pub retrieved: Vec<RetrievedCase>,
}

impl PromptBundle {
    /// System and user text joined, as sent to single-message endpoints and hashed for replay.
    pub fn render(&self) -> String {
        format!("{}\n\n{}", self.system_text, self.user_text)
    }

    /// The target report as embedded between the report markers.
    pub fn report_segment(&self) -> &str {
        let Some(start) = self.user_text.find(REPORT_BEGIN) else { return "" };
        let body = &self.user_text[start + REPORT_BEGIN.len()..];
        let end = body.rfind(REPORT_END).unwrap_or(body.len());
        body[..end].trim_matches('\n')
    }
}

/// System prompt plus one user template per strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub system: String,
    templates: [String; 5],
}

impl TemplateSet {
    pub fn shipped() -> Self {
        Self {
            system: include_str!("../../templates/system.txt").to_string(),
            templates: [
                include_str!("../../templates/basic_zero_shot.txt").to_string(),
                include_str!("../../templates/enhanced_zero_shot.txt").to_string(),
                include_str!("../../templates/few_shot.txt").to_string(),
                include_str!("../../templates/cot.txt").to_string(),
                include_str!("../../templates/rag.txt").to_string(),
            ],
        }
    }

    /// Shipped templates, replaced by any same-named file found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, TriageError> {
        let mut set = Self::shipped();
        let read = |name: &str| -> Result<Option<String>, TriageError> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(text) => Ok(Some(text)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(TriageError::Template(format!("{}: {e}", path.display()))),
            }
        };
        if let Some(system) = read("system.txt")? {
            set.system = system;
        }
        for strategy in PromptStrategy::ALL {
            if let Some(text) = read(strategy.template_file())? {
                set.templates[strategy.index()] = text;
            }
        }
        Ok(set)
    }

    pub fn template(&self, strategy: PromptStrategy) -> &str {
        &self.templates[strategy.index()]
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::shipped()
    }
}

/// Replaces `{report}`, `{guidelines}`, `{exemplars}` and `{retrieved}` in one
/// left-to-right pass. Substituted text is never rescanned; other braces are kept.
pub fn substitute(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let hit = values.iter().find(|(name, _)| {
            tail.len() > name.len() + 1 && tail[1..].starts_with(name) && tail[1 + name.len()..].starts_with('}')
        });
        match hit {
            Some((name, value)) => {
                out.push_str(value);
                rest = &tail[name.len() + 2..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn class_title(label: Label) -> &'static str {
    match label {
        Label::GenuineBug => "genuine bug",
        Label::FalsePositive => "false positive",
    }
}

fn render_exemplars(exemplars: &[Exemplar]) -> String {
    exemplars
        .iter()
        .enumerate()
        .map(|(i, e)| {
            format!(
                "--- Example {} ({}) ---\n{}\nReasoning: {}\nLABEL: {}",
                i + 1,
                class_title(e.label),
                e.text.trim_end(),
                e.rationale.trim(),
                e.label.marker()
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn render_retrieved(cases: &[RetrievedCase]) -> String {
    cases
        .iter()
        .enumerate()
        .map(|(i, c)| {
            format!(
                "--- Similar report {} [{}, similarity {:.3}] ---\n{}",
                i + 1,
                c.label.marker(),
                c.similarity,
                c.text.trim_end()
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn missing(strategy: PromptStrategy, what: &str) -> TriageError {
    TriageError::MissingContext { strategy, what: what.to_string() }
}

pub fn build_prompt(
    strategy: PromptStrategy,
    report: &BugReport,
    context: &TriageContext,
) -> Result<PromptBundle, TriageError> {
    build_prompt_with(&TemplateSet::shipped(), strategy, report, context)
}

/// Fills the strategy's template. Context the strategy does not use is ignored.
pub fn build_prompt_with(
    templates: &TemplateSet,
    strategy: PromptStrategy,
    report: &BugReport,
    context: &TriageContext,
) -> Result<PromptBundle, TriageError> {
    let mut exemplars = Vec::new();
    let mut retrieved = Vec::new();
    let mut guidelines = "";
    match strategy {
        PromptStrategy::EnhancedZeroShot => {
            guidelines = context
                .guidelines
                .as_deref()
                .filter(|g| !g.trim().is_empty())
                .ok_or_else(|| missing(strategy, "guidelines"))?;
        }
        PromptStrategy::FewShot => {
            let given = context.exemplars.as_ref().ok_or_else(|| missing(strategy, "exemplars"))?;
            let balanced = given.len() == 2 && given[0].label != given[1].label;
            if !balanced {
                return Err(missing(strategy, "one exemplar per class"));
            }
            exemplars = given.clone();
        }
        PromptStrategy::Rag => {
            let given = context
                .retrieved
                .as_ref()
                .filter(|r| !r.is_empty())
                .ok_or_else(|| missing(strategy, "retrieved cases"))?;
            let genuine = given.iter().filter(|c| c.label == Label::GenuineBug).count();
            if genuine * 2 != given.len() {
                return Err(missing(strategy, "class-balanced retrieved cases"));
            }
            retrieved = given.clone();
        }
        PromptStrategy::BasicZeroShot | PromptStrategy::ChainOfThought => {}
    }
    let report_text = report.text();
    let exemplar_text = render_exemplars(&exemplars);
    let retrieved_text = render_retrieved(&retrieved);
    let user_text = substitute(
        templates.template(strategy),
        &[
            ("report", report_text.trim_end()),
            ("guidelines", guidelines.trim_end()),
            ("exemplars", &exemplar_text),
            ("retrieved", &retrieved_text),
        ],
    );
    Ok(PromptBundle { strategy, system_text: templates.system.trim_end().to_string(), user_text, exemplars, retrieved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::*;
    use crate::corpus::{ReportKey, Source};

    fn report() -> BugReport {
        let mut r = bugzilla("5", "INVALID", "2022-01-01T00:00:00Z", vec![]);
        r.title = "Touchpad stops after resume".into();
        r.description = "Literal {guidelines} in user text stays as is.".into();
        r
    }

    fn case(id: &str, label: Label) -> RetrievedCase {
        RetrievedCase {
            key: ReportKey::new(Source::Bugzilla, id),
            label,
            text: format!("case text {id}"),
            similarity: 0.5,
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in PromptStrategy::ALL {
            assert_eq!(s.as_str().parse::<PromptStrategy>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
    }

    #[test]
    fn substitution_is_single_pass() {
        let out = substitute("a {report} b {other} {guidelines}", &[("report", "{guidelines}"), ("guidelines", "G")]);
        assert_eq!(out, "a {guidelines} b {other} G");
    }

    #[test]
    fn basic_prompt_wraps_report() {
        let b = build_prompt(PromptStrategy::BasicZeroShot, &report(), &TriageContext::default()).unwrap();
        assert_eq!(b.report_segment(), report().text());
        assert!(b.exemplars.is_empty() && b.retrieved.is_empty());
        assert!(b.system_text.contains("LABEL: GENUINE_BUG"));
    }

    #[test]
    fn cot_has_step_headers() {
        let b = build_prompt(PromptStrategy::ChainOfThought, &report(), &TriageContext::default()).unwrap();
        for h in COT_HEADERS {
            assert!(b.user_text.contains(h), "{h}");
        }
    }

    #[test]
    fn missing_context_errors() {
        for s in [PromptStrategy::EnhancedZeroShot, PromptStrategy::FewShot, PromptStrategy::Rag] {
            assert!(matches!(
                build_prompt(s, &report(), &TriageContext::default()),
                Err(TriageError::MissingContext { strategy, .. }) if strategy == s
            ));
        }
        let same_class = TriageContext {
            exemplars: Some(vec![default_exemplars()[0].clone(), default_exemplars()[0].clone()]),
            ..Default::default()
        };
        assert!(build_prompt(PromptStrategy::FewShot, &report(), &same_class).is_err());
        let unbalanced = TriageContext {
            retrieved: Some(vec![case("1", Label::GenuineBug), case("2", Label::GenuineBug)]),
            ..Default::default()
        };
        assert!(build_prompt(PromptStrategy::Rag, &report(), &unbalanced).is_err());
    }

    #[test]
    fn few_shot_and_rag_include_context() {
        let ctx = TriageContext {
            exemplars: Some(default_exemplars()),
            retrieved: Some(vec![case("1", Label::GenuineBug), case("2", Label::FalsePositive)]),
            guidelines: Some("- Drivers: often hardware".into()),
        };
        let few = build_prompt(PromptStrategy::FewShot, &report(), &ctx).unwrap();
        assert_eq!(few.exemplars.len(), 2);
        assert!(few.user_text.contains(&default_exemplars()[1].rationale));
        assert!(few.retrieved.is_empty());
        let rag = build_prompt(PromptStrategy::Rag, &report(), &ctx).unwrap();
        assert!(rag.user_text.contains("case text 1") && rag.user_text.contains("case text 2"));
        assert_eq!(rag.report_segment(), report().text());
        let enhanced = build_prompt(PromptStrategy::EnhancedZeroShot, &report(), &ctx).unwrap();
        assert!(enhanced.user_text.contains("- Drivers: often hardware"));
    }

    #[test]
    fn shipped_exemplars_are_balanced() {
        let e = default_exemplars();
        assert_eq!(e.len(), 2);
        assert_ne!(e[0].label, e[1].label);
    }

    #[test]
    fn overrides_replace_named_files_only() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("cot.txt"), "custom {report}").unwrap();
        let set = TemplateSet::with_overrides(dir.path()).unwrap();
        assert_eq!(set.template(PromptStrategy::ChainOfThought), "custom {report}");
        assert_eq!(set.template(PromptStrategy::Rag), TemplateSet::shipped().template(PromptStrategy::Rag));
    }
}
