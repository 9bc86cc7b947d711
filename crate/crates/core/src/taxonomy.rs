//! Closed root-cause taxonomy for false-positive reports and the guideline
//! sheet assembled from component/root-cause statistics.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Component;
use crate::stats::{ComponentDistribution, ProportionMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum TaxonomyError {
    #[error("guideline input does not cover component {0}")]
    IncompleteInput(String),
    #[error("unknown root cause `{0}`")]
    UnknownRootCause(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootCauseCategory {
    ExternalDependencyIssues,
    MisunderstandingOfFeaturesOrLimitations,
    IncorrectEnvironmentConfiguration,
    IncorrectUsage,
}

impl RootCauseCategory {
    pub const ALL: [RootCauseCategory; 4] = [
        RootCauseCategory::ExternalDependencyIssues,
        RootCauseCategory::MisunderstandingOfFeaturesOrLimitations,
        RootCauseCategory::IncorrectEnvironmentConfiguration,
        RootCauseCategory::IncorrectUsage,
    ];

    pub fn title(self) -> &'static str {
        match self {
            RootCauseCategory::ExternalDependencyIssues => "External Dependency Issues",
            RootCauseCategory::MisunderstandingOfFeaturesOrLimitations => "Misunderstanding of Features or Limitations",
            RootCauseCategory::IncorrectEnvironmentConfiguration => "Incorrect Environment Configuration",
            RootCauseCategory::IncorrectUsage => "Incorrect Usage",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn definition(self) -> &'static str {
        match self {
            RootCauseCategory::ExternalDependencyIssues => {
                "The failure originates outside the kernel (a device, its firmware, or a userspace \
                 program or library) but surfaces through kernel messages or behavior."
            }
            RootCauseCategory::MisunderstandingOfFeaturesOrLimitations => {
                "The kernel behaves as designed; the reporter expected different semantics, \
                 was unaware of a deliberate restriction, or misread an interface contract."
            }
            RootCauseCategory::IncorrectEnvironmentConfiguration => {
                "The kernel build, boot parameters, system settings or hardware setup were \
                 wrong for the workload, and correcting the setup makes the problem disappear."
            }
            RootCauseCategory::IncorrectUsage => {
                "The kernel was driven outside its supported usage: deprecated or unsupported \
                 interfaces, or operations performed without the required preconditions."
            }
        }
    }
}

impl fmt::Display for RootCauseCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootCauseSubcategory {
    HardwareIssues,
    UserspaceDependencyIssues,
    FirmwareIssues,
    ImplicitBehaviorMisunderstanding,
    LimitationUnawareness,
    SemanticMisunderstanding,
    SoftwareEnvironmentConfiguration,
    HardwareEnvironmentConfiguration,
    UnsupportedInvocation,
    IncorrectOperation,
}

impl RootCauseSubcategory {
    pub const ALL: [RootCauseSubcategory; 10] = [
        RootCauseSubcategory::HardwareIssues,
        RootCauseSubcategory::UserspaceDependencyIssues,
        RootCauseSubcategory::FirmwareIssues,
        RootCauseSubcategory::ImplicitBehaviorMisunderstanding,
        RootCauseSubcategory::LimitationUnawareness,
        RootCauseSubcategory::SemanticMisunderstanding,
        RootCauseSubcategory::SoftwareEnvironmentConfiguration,
        RootCauseSubcategory::HardwareEnvironmentConfiguration,
        RootCauseSubcategory::UnsupportedInvocation,
        RootCauseSubcategory::IncorrectOperation,
    ];

    pub fn category(self) -> RootCauseCategory {
        use RootCauseCategory::*;
        use RootCauseSubcategory::*;
        match self {
            HardwareIssues | UserspaceDependencyIssues | FirmwareIssues => ExternalDependencyIssues,
            ImplicitBehaviorMisunderstanding | LimitationUnawareness | SemanticMisunderstanding => {
                MisunderstandingOfFeaturesOrLimitations
            }
            SoftwareEnvironmentConfiguration | HardwareEnvironmentConfiguration => IncorrectEnvironmentConfiguration,
            UnsupportedInvocation | IncorrectOperation => IncorrectUsage,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            RootCauseSubcategory::HardwareIssues => "Hardware Issues",
            RootCauseSubcategory::UserspaceDependencyIssues => "Userspace Dependency Issues",
            RootCauseSubcategory::FirmwareIssues => "Outdated Firmware or Firmware Issues",
            RootCauseSubcategory::ImplicitBehaviorMisunderstanding => "Implicit Behavior Misunderstanding",
            RootCauseSubcategory::LimitationUnawareness => "Limitation Unawareness",
            RootCauseSubcategory::SemanticMisunderstanding => "Semantic Misunderstanding",
            RootCauseSubcategory::SoftwareEnvironmentConfiguration => "Software Environment Configuration",
            RootCauseSubcategory::HardwareEnvironmentConfiguration => "Hardware Environment Configuration",
            RootCauseSubcategory::UnsupportedInvocation => "Unsupported Invocation",
            RootCauseSubcategory::IncorrectOperation => "Incorrect Operation",
        }
    }
}

impl FromStr for RootCauseSubcategory {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| TaxonomyError::UnknownRootCause(s.to_string()))
    }
}

impl FromStr for RootCauseCategory {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| TaxonomyError::UnknownRootCause(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub category: RootCauseCategory,
    pub subcategory: RootCauseSubcategory,
    pub definition: &'static str,
    pub example: &'static str,
}

pub fn catalog() -> Vec<CatalogEntry> {
    use RootCauseSubcategory::*;
    let rows: [(RootCauseSubcategory, &str, &str); 10] = [
        (
            HardwareIssues,
            "A faulty or quirky device produces errors that look like kernel defects.",
            "A USB adapter drops its link under load; swapping it for another vendor's adapter fixes it.",
        ),
        (
            UserspaceDependencyIssues,
            "A userspace application or library misbehaves and the kernel gets blamed.",
            "A tracing GUI renders empty graphs until the toolkit library it links against is rebuilt.",
        ),
        (
            FirmwareIssues,
            "Outdated or buggy device firmware triggers warnings or failures.",
            "Suspend fails on a laptop until the BIOS is updated to the vendor's latest release.",
        ),
        (
            ImplicitBehaviorMisunderstanding,
            "Intended but non-obvious runtime behavior (caching, laziness, timing) is read as a fault.",
            "Free memory shrinks after heavy file I/O because the page cache grew.",
        ),
        (
            LimitationUnawareness,
            "A deliberate restriction or resource cap is mistaken for a malfunction.",
            "A syscall returns EPERM inside a restricted namespace where it is intentionally disallowed.",
        ),
        (
            SemanticMisunderstanding,
            "An interface contract, error code or log line is interpreted incorrectly.",
            "An informational log line at boot is reported as a crash.",
        ),
        (
            SoftwareEnvironmentConfiguration,
            "Kernel build options, boot parameters or system settings are inconsistent with the workload.",
            "A feature is missing because the corresponding Kconfig option was not enabled.",
        ),
        (
            HardwareEnvironmentConfiguration,
            "The hardware setup does not match what the kernel or driver supports.",
            "A driver fails to load on a CPU architecture it was never built for.",
        ),
        (
            UnsupportedInvocation,
            "Legacy options or obsolete interfaces are used outside their supported scope.",
            "A removed sysctl is still written by a startup script and its absence is reported.",
        ),
        (
            IncorrectOperation,
            "An operation is performed without its preconditions, such as missing privileges.",
            "A privileged command run as an unprivileged user fails and is reported as a bug.",
        ),
    ];
    rows.into_iter()
        .map(|(subcategory, definition, example)| CatalogEntry {
            category: subcategory.category(),
            subcategory,
            definition,
            example,
        })
        .collect()
}

/// Published per-source counts for one subcategory. `reported_total` is kept
/// exactly as published even where it disagrees with the per-source sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReferenceCount {
    pub subcategory: RootCauseSubcategory,
    pub bugzilla: u32,
    pub syzkaller: u32,
    pub reported_total: u32,
}

pub fn reference_counts() -> [ReferenceCount; 10] {
    use RootCauseSubcategory::*;
    let row = |subcategory, bugzilla, syzkaller, reported_total| ReferenceCount {
        subcategory,
        bugzilla,
        syzkaller,
        reported_total,
    };
    [
        row(HardwareIssues, 45, 21, 66),
        row(UserspaceDependencyIssues, 85, 36, 121),
        row(FirmwareIssues, 41, 1, 42),
        row(ImplicitBehaviorMisunderstanding, 53, 82, 135),
        row(LimitationUnawareness, 22, 25, 47),
        row(SemanticMisunderstanding, 6, 7, 13),
        row(SoftwareEnvironmentConfiguration, 31, 9, 40),
        row(HardwareEnvironmentConfiguration, 10, 2, 12),
        row(UnsupportedInvocation, 6, 8, 13),
        row(IncorrectOperation, 4, 3, 7),
    ]
}

/// Published category totals as `(category, bugzilla, syzkaller, total)`.
pub fn reference_category_totals() -> [(RootCauseCategory, u32, u32, u32); 4] {
    use RootCauseCategory::*;
    [
        (ExternalDependencyIssues, 171, 58, 229),
        (MisunderstandingOfFeaturesOrLimitations, 81, 114, 195),
        (IncorrectEnvironmentConfiguration, 41, 11, 52),
        (IncorrectUsage, 10, 11, 21),
    ]
}

/// Lists every place where the published counts do not add up.
pub fn reference_inconsistencies() -> Vec<String> {
    let mut issues = Vec::new();
    let counts = reference_counts();
    for c in &counts {
        if c.bugzilla + c.syzkaller != c.reported_total {
            issues.push(format!(
                "{}: {} + {} != reported total {}",
                c.subcategory.title(),
                c.bugzilla,
                c.syzkaller,
                c.reported_total
            ));
        }
    }
    for (category, bugzilla, syzkaller, total) in reference_category_totals() {
        let rows: Vec<_> = counts.iter().filter(|c| c.subcategory.category() == category).collect();
        let sub_total: u32 = rows.iter().map(|c| c.reported_total).sum();
        let sub_bz: u32 = rows.iter().map(|c| c.bugzilla).sum();
        let sub_syz: u32 = rows.iter().map(|c| c.syzkaller).sum();
        if sub_total != total {
            issues.push(format!(
                "{}: subcategory totals sum to {sub_total}, category total is {total}",
                category.title()
            ));
        }
        if sub_bz != bugzilla || sub_syz != syzkaller {
            issues.push(format!(
                "{}: per-source subcategory sums ({sub_bz}, {sub_syz}) differ from ({bugzilla}, {syzkaller})",
                category.title()
            ));
        }
    }
    issues
}

/// Prompt-ready summary of where false positives concentrate and why.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GuidelineSheet {
    /// Share of all false-positive reports, per named component.
    pub component_shares: Vec<(Component, f64)>,
    /// Dominant root cause per named component; `None` when every category ties.
    pub dominant_causes: Vec<(Component, Option<(RootCauseCategory, f64)>)>,
    pub category_definitions: Vec<(RootCauseCategory, String)>,
    pub citations: Vec<String>,
}

/// Formats a percentage with at most two decimals and no trailing zeros.
fn percent(fraction: f64) -> String {
    let s = format!("{:.2}", fraction * 100.0);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}%")
}

fn dominant(row: &[f64; 4]) -> Option<(RootCauseCategory, f64)> {
    if row.iter().all(|&p| p == row[0]) {
        return None;
    }
    let mut best = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > row[best] {
            best = i;
        }
    }
    Some((RootCauseCategory::ALL[best], row[best]))
}

pub fn build_guidelines(
    distribution: &ComponentDistribution,
    proportions: &ProportionMatrix,
) -> Result<GuidelineSheet, TaxonomyError> {
    let mut component_shares = Vec::new();
    let mut dominant_causes = Vec::new();
    for component in Component::NAMED {
        let share = distribution
            .rows
            .iter()
            .find(|r| r.component == component)
            .map(|r| r.proportion)
            .ok_or_else(|| TaxonomyError::IncompleteInput(component.to_string()))?;
        let row = proportions.row(&component).ok_or_else(|| TaxonomyError::IncompleteInput(component.to_string()))?;
        component_shares.push((component.clone(), share));
        dominant_causes.push((component, dominant(row)));
    }
    Ok(GuidelineSheet {
        component_shares,
        dominant_causes,
        category_definitions: RootCauseCategory::ALL.iter().map(|c| (*c, c.definition().to_string())).collect(),
        citations: vec![
            format!("component shares: {} false-positive reports", distribution.total_false_positives),
            format!("root-cause proportions: {} false-positive reports with a root cause", proportions.n),
        ],
    })
}

impl GuidelineSheet {
    /// Renders the plain-text prompt fragment.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("Where false-positive reports concentrate:\n");
        for (component, share) in &self.component_shares {
            let _ = writeln!(out, "- {component}: {} of false-positive reports", percent(*share));
        }
        out.push_str("\nDominant root causes by component:\n");
        for (component, cause) in &self.dominant_causes {
            match cause {
                Some((category, p)) => {
                    let _ =
                        writeln!(out, "- {component}: {} dominate ({})", category.title().to_lowercase(), percent(*p));
                }
                None => {
                    let _ = writeln!(out, "- {component}: no dominant cause");
                }
            }
        }
        out.push_str("\nRoot-cause categories:\n");
        for (category, definition) in &self.category_definitions {
            let _ = writeln!(out, "- {category}: {definition}");
        }
        out.push_str("\nSources:\n");
        for citation in &self.citations {
            let _ = writeln!(out, "- {citation}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ComponentShare;

    fn distribution() -> ComponentDistribution {
        ComponentDistribution {
            total_false_positives: 70,
            rows: Component::NAMED
                .iter()
                .map(|c| ComponentShare {
                    component: c.clone(),
                    bugzilla: 5,
                    syzkaller: 5,
                    total: 10,
                    proportion: 1.0 / 7.0,
                })
                .collect(),
        }
    }

    fn matrix(row: [f64; 4]) -> ProportionMatrix {
        ProportionMatrix {
            rows: Component::NAMED.iter().map(|c| (c.clone(), row)).collect(),
            counts: Component::NAMED.iter().map(|c| (c.clone(), [1, 1, 1, 1])).collect(),
            n: 28,
        }
    }

    #[test]
    fn subcategory_parents() {
        let entries = catalog();
        assert_eq!(entries.len(), 10);
        let userspace =
            entries.iter().find(|e| e.subcategory == RootCauseSubcategory::UserspaceDependencyIssues).unwrap();
        assert_eq!(userspace.category, RootCauseCategory::ExternalDependencyIssues);
        let per_category: Vec<usize> =
            RootCauseCategory::ALL.iter().map(|c| entries.iter().filter(|e| e.category == *c).count()).collect();
        assert_eq!(per_category, [3, 3, 2, 2]);
        assert_eq!(catalog(), entries);
    }

    #[test]
    fn inconsistencies_are_reported_not_fixed() {
        let issues = reference_inconsistencies();
        assert_eq!(issues.len(), 2, "{issues:?}");
        assert!(issues[0].contains("Unsupported Invocation: 6 + 8 != reported total 13"));
        assert!(issues[1].contains("Incorrect Usage: subcategory totals sum to 20, category total is 21"));
        let unsupported = reference_counts()[8];
        assert_eq!((unsupported.bugzilla, unsupported.syzkaller, unsupported.reported_total), (6, 8, 13));
    }

    #[test]
    fn security_line_names_its_dominant_cause() {
        let mut m = matrix([0.25; 4]);
        m.rows[5].1 = [0.75, 0.125, 0.0625, 0.0625];
        let sheet = build_guidelines(&distribution(), &m).unwrap();
        let text = sheet.render();
        assert!(text.contains("- Security: external dependency issues dominate (75%)\n"), "{text}");
        assert!(text.contains("- Drivers: no dominant cause\n"));
    }

    #[test]
    fn uniform_rows_have_no_dominant_cause() {
        let sheet = build_guidelines(&distribution(), &matrix([0.25; 4])).unwrap();
        assert!(sheet.dominant_causes.iter().all(|(_, d)| d.is_none()));
    }

    #[test]
    fn ties_follow_category_order() {
        assert_eq!(
            dominant(&[0.1, 0.45, 0.45, 0.0]),
            Some((RootCauseCategory::MisunderstandingOfFeaturesOrLimitations, 0.45))
        );
    }

    #[test]
    fn missing_io_row_is_incomplete() {
        let mut m = matrix([0.25; 4]);
        m.rows.retain(|(c, _)| *c != Component::IO);
        assert_eq!(build_guidelines(&distribution(), &m).unwrap_err(), TaxonomyError::IncompleteInput("IO".into()));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = build_guidelines(&distribution(), &matrix([0.4, 0.3, 0.2, 0.1])).unwrap().render();
        let b = build_guidelines(&distribution(), &matrix([0.4, 0.3, 0.2, 0.1])).unwrap().render();
        assert_eq!(a, b);
        assert_eq!(percent(0.619), "61.9%");
        assert_eq!(percent(0.2342), "23.42%");
    }

    #[test]
    fn subcategory_names_parse() {
        assert_eq!("firmware_issues".parse::<RootCauseSubcategory>().unwrap(), RootCauseSubcategory::FirmwareIssues);
        assert!("nonsense".parse::<RootCauseSubcategory>().is_err());
    }
}
