use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use fptriage::annotate::Label;
use fptriage::corpus::Source;
use fptriage::eval::csv_escape;
use fptriage::stats::{
    chi_square_independence, cliffs_delta, component_distribution, compute_effort, mann_whitney_u,
    stagewise_proportions, summarize, EffortMetrics, FalsePositiveRecord, TestResult,
};
use fptriage::taxonomy::{build_guidelines, RootCauseCategory};
use serde::Serialize;

use crate::common::{truth, usage, write_text, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
}

type Extract = fn(&EffortMetrics) -> f64;

const METRICS: [(&str, Extract); 3] = [
    ("participants", |m| m.participants as f64),
    ("comments", |m| m.comments as f64),
    ("time_to_close_hours", |m| m.time_to_close_hours),
];

#[derive(Serialize)]
struct EffortTest {
    source: Source,
    metric: &'static str,
    mann_whitney: TestResult,
    cliffs_delta: TestResult,
}

#[derive(Serialize, Default)]
struct TestsOutput {
    effort: Vec<EffortTest>,
    component_root_cause_chi_square: Option<TestResult>,
    notes: Vec<String>,
}

fn label_name(label: Label) -> &'static str {
    match label {
        Label::GenuineBug => "genuine_bug",
        Label::FalsePositive => "false_positive",
    }
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let (corpus_path, corpus) = ctx.load_corpus(args.corpus)?;
    let (labels_path, labels) = ctx.load_labels(args.labels)?;
    let truth = truth(&labels);
    if truth.is_empty() {
        return Err(usage("labels file has no genuine or false-positive labels"));
    }
    let mut rows = Vec::new();
    let mut fp_records = Vec::new();
    let mut notes = Vec::new();
    for (key, label) in &truth {
        let Some(report) = corpus.get(key) else {
            notes.push(format!("{key} is labeled but not in the corpus"));
            continue;
        };
        rows.push((key.clone(), *label, compute_effort(report)?));
        fp_records.push(FalsePositiveRecord {
            key: key.clone(),
            component: report.component(),
            label: *label,
            root_cause: labels[key].root_cause,
        });
    }
    let results = &ctx.results;
    let mut outputs = Vec::new();

    let mut effort_csv = String::from("source,id,label,participants,comments,time_to_close_hours\n");
    for (key, label, m) in &rows {
        let _ = writeln!(
            effort_csv,
            "{},{},{},{},{},{:.4}",
            key.source,
            csv_escape(&key.id),
            label_name(*label),
            m.participants,
            m.comments,
            m.time_to_close_hours
        );
    }
    outputs.push(results.join("effort.csv"));
    write_text(outputs.last().unwrap(), effort_csv)?;

    let mut summary_csv = String::from("source,label,metric,n,mean,median\n");
    let mut tests = TestsOutput::default();
    for source in [Source::Bugzilla, Source::Syzkaller] {
        for (metric, get) in METRICS {
            let sample = |label: Label| -> Vec<f64> {
                rows.iter().filter(|(k, l, _)| k.source == source && *l == label).map(|(_, _, m)| get(m)).collect()
            };
            let (fp, genuine) = (sample(Label::FalsePositive), sample(Label::GenuineBug));
            for (label, values) in [(Label::FalsePositive, &fp), (Label::GenuineBug, &genuine)] {
                if let Some((mean, median)) = summarize(values) {
                    let _ = writeln!(
                        summary_csv,
                        "{source},{},{metric},{},{mean:.4},{median:.4}",
                        label_name(label),
                        values.len()
                    );
                }
            }
            if fp.is_empty() || genuine.is_empty() {
                notes.push(format!("{source} {metric}: skipped, one group is empty"));
                continue;
            }
            tests.effort.push(EffortTest {
                source,
                metric,
                mann_whitney: mann_whitney_u(&fp, &genuine)?,
                cliffs_delta: cliffs_delta(&fp, &genuine)?,
            });
        }
    }
    outputs.push(results.join("effort_summary.csv"));
    write_text(outputs.last().unwrap(), summary_csv)?;

    let mut tests_csv = String::from("source,metric,n_fp,n_genuine,u,p_value,method,delta,magnitude\n");
    for t in &tests.effort {
        let _ = writeln!(
            tests_csv,
            "{},{},{},{},{:.1},{:.6},{},{:.4},{}",
            t.source,
            t.metric,
            t.mann_whitney.n_a,
            t.mann_whitney.n_b,
            t.mann_whitney.statistic,
            t.mann_whitney.p_value,
            serde_json::to_value(t.mann_whitney.method)?.as_str().unwrap_or_default(),
            t.cliffs_delta.statistic,
            t.cliffs_delta.magnitude.map(|m| m.as_str()).unwrap_or_default()
        );
    }
    outputs.push(results.join("tests.csv"));
    write_text(outputs.last().unwrap(), tests_csv)?;

    let distribution = component_distribution(&fp_records);
    let mut components_csv = String::from("component,bugzilla,syzkaller,total,proportion\n");
    for row in &distribution.rows {
        let _ = writeln!(
            components_csv,
            "{},{},{},{},{:.4}",
            csv_escape(row.component.display_name()),
            row.bugzilla,
            row.syzkaller,
            row.total,
            row.proportion
        );
    }
    outputs.push(results.join("components.csv"));
    write_text(outputs.last().unwrap(), components_csv)?;

    match stagewise_proportions(&fp_records) {
        Ok(matrix) => {
            let mut csv = String::from("component,n");
            for c in RootCauseCategory::ALL {
                let _ = write!(csv, ",{}", serde_json::to_value(c)?.as_str().unwrap_or_default());
            }
            csv.push('\n');
            for ((component, props), (_, counts)) in matrix.rows.iter().zip(&matrix.counts) {
                let _ = write!(csv, "{},{}", csv_escape(component.display_name()), counts.iter().sum::<u64>());
                for p in props {
                    let _ = write!(csv, ",{p:.4}");
                }
                csv.push('\n');
            }
            outputs.push(results.join("root_causes.csv"));
            write_text(outputs.last().unwrap(), csv)?;
            match chi_square_independence(&matrix.contingency()) {
                Ok(result) => tests.component_root_cause_chi_square = Some(result),
                Err(e) => notes.push(format!("chi-square skipped: {e}")),
            }
            match build_guidelines(&distribution, &matrix) {
                Ok(sheet) => {
                    outputs.push(results.join("guidelines.txt"));
                    write_text(outputs.last().unwrap(), sheet.render())?;
                }
                Err(e) => notes.push(format!("guidelines skipped: {e}")),
            }
        }
        Err(e) => notes.push(format!("root-cause analysis skipped: {e}")),
    }

    tests.notes = notes;
    for note in &tests.notes {
        eprintln!("warning: {note}");
    }
    outputs.push(results.join("tests.json"));
    write_text(outputs.last().unwrap(), serde_json::to_string_pretty(&tests)? + "\n")?;

    let by_label: BTreeMap<&str, usize> = rows.iter().fold(BTreeMap::new(), |mut acc, (_, l, _)| {
        *acc.entry(label_name(*l)).or_default() += 1;
        acc
    });
    println!(
        "stats over {} reports ({}); {} tests; outputs in {}",
        rows.len(),
        by_label.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", "),
        tests.effort.len(),
        results.display()
    );
    let outputs: Vec<&std::path::Path> = outputs.iter().map(PathBuf::as_path).collect();
    ctx.record("stats", ctx.config.seed, &[&corpus_path, &labels_path], &outputs)
}
