use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::annotate::Label;
use crate::corpus::{Component, ReportKey, Source};
use crate::taxonomy::RootCauseCategory;

/// One labeled report reduced to what the component analyses need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsePositiveRecord {
    pub key: ReportKey,
    pub component: Component,
    pub label: Label,
    pub root_cause: Option<RootCauseCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentShare {
    pub component: Component,
    pub bugzilla: u64,
    pub syzkaller: u64,
    pub total: u64,
    /// Fraction of all false-positive reports.
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDistribution {
    pub rows: Vec<ComponentShare>,
    pub total_false_positives: u64,
}

/// False-positive counts per component and source, sorted by descending total.
/// The seven named components always appear, with zero counts if need be.
pub fn component_distribution(records: &[FalsePositiveRecord]) -> ComponentDistribution {
    let mut rows: Vec<ComponentShare> = Component::NAMED
        .iter()
        .map(|c| ComponentShare { component: c.clone(), bugzilla: 0, syzkaller: 0, total: 0, proportion: 0.0 })
        .collect();
    let mut total = 0;
    for record in records.iter().filter(|r| r.label == Label::FalsePositive) {
        let idx = match rows.iter().position(|r| r.component == record.component) {
            Some(idx) => idx,
            None => {
                rows.push(ComponentShare {
                    component: record.component.clone(),
                    bugzilla: 0,
                    syzkaller: 0,
                    total: 0,
                    proportion: 0.0,
                });
                rows.len() - 1
            }
        };
        let row = &mut rows[idx];
        match record.key.source {
            Source::Bugzilla => row.bugzilla += 1,
            Source::Syzkaller => row.syzkaller += 1,
        }
        row.total += 1;
        total += 1;
    }
    for row in &mut rows {
        row.proportion = if total == 0 { 0.0 } else { row.total as f64 / total as f64 };
    }
    rows.sort_by(|a, b| b.total.cmp(&a.total).then_with(|| a.component.cmp(&b.component)));
    ComponentDistribution { rows, total_false_positives: total }
}

/// Row-stochastic component x root-cause matrix over the named components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionMatrix {
    /// Proportions ordered as [`RootCauseCategory::ALL`].
    pub rows: Vec<(Component, [f64; 4])>,
    pub counts: Vec<(Component, [u64; 4])>,
    pub n: u64,
}

impl ProportionMatrix {
    pub fn row(&self, component: &Component) -> Option<&[f64; 4]> {
        self.rows.iter().find(|(c, _)| c == component).map(|(_, r)| r)
    }

    /// Count table for the chi-square test, dropping all-zero category columns.
    pub fn contingency(&self) -> Vec<Vec<u64>> {
        let keep: Vec<usize> = (0..4).filter(|&j| self.counts.iter().any(|(_, r)| r[j] > 0)).collect();
        self.counts.iter().map(|(_, r)| keep.iter().map(|&j| r[j]).collect()).collect()
    }
}

pub fn stagewise_proportions(records: &[FalsePositiveRecord]) -> Result<ProportionMatrix, StatsError> {
    let mut counts: Vec<(Component, [u64; 4])> = Component::NAMED.iter().map(|c| (c.clone(), [0; 4])).collect();
    let mut n = 0;
    for record in records.iter().filter(|r| r.label == Label::FalsePositive) {
        let category = record.root_cause.ok_or_else(|| StatsError::MissingRootCause(record.key.to_string()))?;
        if let Some((_, row)) = counts.iter_mut().find(|(c, _)| *c == record.component) {
            row[category.index()] += 1;
            n += 1;
        }
    }
    counts.retain(|(_, row)| row.iter().sum::<u64>() > 0);
    let rows = counts
        .iter()
        .map(|(c, row)| {
            let total = row.iter().sum::<u64>() as f64;
            (c.clone(), row.map(|x| x as f64 / total))
        })
        .collect();
    Ok(ProportionMatrix { rows, counts, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(
        id: &str,
        source: Source,
        component: Component,
        label: Label,
        cause: Option<RootCauseCategory>,
    ) -> FalsePositiveRecord {
        FalsePositiveRecord { key: ReportKey::new(source, id), component, label, root_cause: cause }
    }

    #[test]
    fn single_driver_false_positive() {
        let d =
            component_distribution(&[record("1", Source::Bugzilla, Component::Drivers, Label::FalsePositive, None)]);
        assert_eq!(d.total_false_positives, 1);
        assert_eq!(d.rows[0].component, Component::Drivers);
        assert_eq!(d.rows[0].proportion, 1.0);
        assert_eq!(d.rows.len(), 7);
        assert!(d.rows[1..].iter().all(|r| r.proportion == 0.0));
    }

    #[test]
    fn genuine_reports_are_not_counted() {
        let d = component_distribution(&[
            record("1", Source::Bugzilla, Component::Drivers, Label::GenuineBug, None),
            record("2", Source::Syzkaller, Component::Other("kvm".into()), Label::FalsePositive, None),
            record("3", Source::Syzkaller, Component::Other("kvm".into()), Label::FalsePositive, None),
            record("4", Source::Bugzilla, Component::IO, Label::FalsePositive, None),
        ]);
        assert_eq!(d.total_false_positives, 3);
        assert_eq!(d.rows[0].component, Component::Other("kvm".into()));
        assert_eq!((d.rows[0].syzkaller, d.rows[0].total), (2, 2));
        assert_eq!(d.rows[1].component, Component::IO);
    }

    #[test]
    fn single_security_external_dependency() {
        let m = stagewise_proportions(&[record(
            "1",
            Source::Bugzilla,
            Component::Security,
            Label::FalsePositive,
            Some(RootCauseCategory::ExternalDependencyIssues),
        )])
        .unwrap();
        assert_eq!(m.rows.len(), 1);
        assert_eq!(m.row(&Component::Security), Some(&[1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn missing_root_cause_is_an_error() {
        let err = stagewise_proportions(&[record("9", Source::Syzkaller, Component::IO, Label::FalsePositive, None)])
            .unwrap_err();
        assert_eq!(err, StatsError::MissingRootCause("syzkaller:9".into()));
    }

    #[test]
    fn contingency_drops_empty_columns() {
        let m = stagewise_proportions(&[
            record("1", Source::Bugzilla, Component::IO, Label::FalsePositive, Some(RootCauseCategory::IncorrectUsage)),
            record(
                "2",
                Source::Bugzilla,
                Component::Tools,
                Label::FalsePositive,
                Some(RootCauseCategory::ExternalDependencyIssues),
            ),
        ])
        .unwrap();
        // rows follow Component::NAMED order (Tools before IO)
        assert_eq!(m.counts[0].0, Component::Tools);
        assert_eq!(m.contingency(), vec![vec![1, 0], vec![0, 1]]);
    }
}
