use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use fptriage::annotate::{read_jsonl, Label};
use fptriage::corpus::{BugReport, ReportKey};
use fptriage::eval::{
    compute_metrics, correctly_flagged, estimate_savings, kfold_split, leak_split, macro_average, metrics_csv, pooled,
    temporal_split, MetricsReport, Partition, SplitKind, SplitSpec,
};
use fptriage::stats::compute_effort;
use fptriage::triage::{knn_predict, train_logreg, PromptStrategy, TfIdf, VerdictRecord};
use serde::Serialize;

use crate::common::{jsonl, truth, usage, write_text, Context};

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Accuracy, precision, recall and F1 of verdict logs against the labels.
    Metrics {
        #[arg(long)]
        labels: Option<PathBuf>,
        /// One or more verdict logs from `classify`.
        #[arg(long = "verdicts", required = true, num_args = 1..)]
        verdicts: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write k-fold, temporal and leak splits of the labeled reports.
    Splits {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// TF-IDF logistic regression and kNN on every split.
    Baselines {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Defaults to `splits.jsonl` in the results directory.
        #[arg(long)]
        splits: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Effort saved by correctly flagged false positives in a verdict log.
    Savings {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        verdicts: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(ctx: &Context, cmd: Command) -> Result<()> {
    match cmd {
        Command::Metrics { labels, verdicts, out } => metrics(ctx, labels, &verdicts, out),
        Command::Splits { corpus, labels, k, seed, out } => splits(ctx, corpus, labels, k, seed, out),
        Command::Baselines { corpus, labels, splits, out } => baselines(ctx, corpus, labels, splits, out),
        Command::Savings { corpus, labels, verdicts, out } => savings(ctx, corpus, labels, &verdicts, out),
    }
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(usage(format!("{what} {} does not exist", path.display())));
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(file).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn is_fold(split_id: Option<&str>) -> bool {
    split_id.is_some_and(|s| s.starts_with("fold-"))
}

/// Macro-averaged and pooled rows over the k-fold members of `reports`.
fn fold_summaries(reports: &[MetricsReport]) -> Result<Vec<MetricsReport>> {
    let folds: Vec<MetricsReport> = reports.iter().filter(|r| is_fold(r.split_id.as_deref())).cloned().collect();
    if folds.len() < 2 {
        return Ok(Vec::new());
    }
    let strategy = folds[0].strategy;
    Ok(vec![macro_average(&folds)?.tagged(strategy, Some("macro")), pooled(&folds)?.tagged(strategy, Some("pooled"))])
}

fn metrics(ctx: &Context, labels: Option<PathBuf>, verdicts: &[PathBuf], out: Option<PathBuf>) -> Result<()> {
    let (labels_path, labels) = ctx.load_labels(labels)?;
    let truth = truth(&labels);
    type Group = (PromptStrategy, Option<String>);
    let mut groups: BTreeMap<Group, BTreeMap<ReportKey, Label>> = BTreeMap::new();
    let mut unparsed = 0;
    for path in verdicts {
        for record in read_records::<VerdictRecord>(path, "verdict log")? {
            let group = groups.entry((record.strategy, record.split_id.clone())).or_default();
            match record.label {
                Some(label) => {
                    group.insert(record.report_id, label);
                }
                None => unparsed += 1,
            }
        }
    }
    let mut rows = Vec::new();
    let mut per_strategy: BTreeMap<PromptStrategy, Vec<MetricsReport>> = BTreeMap::new();
    for ((strategy, split_id), predictions) in &groups {
        let subset: BTreeMap<ReportKey, Label> =
            predictions.keys().filter_map(|k| truth.get(k).map(|l| (k.clone(), *l))).collect();
        let report = compute_metrics(predictions, &subset)
            .with_context(|| format!("{strategy} {}", split_id.as_deref().unwrap_or("")))?
            .tagged(Some(*strategy), split_id.as_deref());
        per_strategy.entry(*strategy).or_default().push(report.clone());
        rows.push(report);
    }
    for reports in per_strategy.values() {
        rows.extend(fold_summaries(reports)?);
    }
    let out = ctx.output(out, None, "metrics.csv");
    write_text(&out, metrics_csv(&rows))?;
    let json = out.with_extension("json");
    write_text(&json, serde_json::to_string_pretty(&rows)? + "\n")?;
    if unparsed > 0 {
        eprintln!("warning: {unparsed} verdicts had no parseable label and were left out");
    }
    for r in &rows {
        println!(
            "{:<20} {:<10} n={:<5} acc={:.4} p={:.4} r={:.4} f1={:.4}",
            r.strategy.map(|s| s.as_str()).unwrap_or(""),
            r.split_id.as_deref().unwrap_or("-"),
            r.n,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1
        );
    }
    let mut inputs: Vec<&Path> = vec![&labels_path];
    inputs.extend(verdicts.iter().map(PathBuf::as_path));
    ctx.record("evaluate metrics", ctx.config.seed, &inputs, &[&out, &json])
}

fn labeled_reports<'a>(corpus: &'a fptriage::corpus::Corpus, truth: &BTreeMap<ReportKey, Label>) -> Vec<&'a BugReport> {
    truth.keys().filter_map(|k| corpus.get(k)).collect()
}

fn splits(
    ctx: &Context,
    corpus: Option<PathBuf>,
    labels: Option<PathBuf>,
    k: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<()> {
    let (corpus_path, corpus) = ctx.load_corpus(corpus)?;
    let (labels_path, labels) = ctx.load_labels(labels)?;
    let truth = truth(&labels);
    let reports = labeled_reports(&corpus, &truth);
    let keys: Vec<ReportKey> = reports.iter().map(|r| r.key()).collect();
    let k = k.unwrap_or(ctx.config.folds);
    let seed = seed.unwrap_or(ctx.config.seed);
    let mut specs = kfold_split(&keys, k, seed).map_err(usage)?;
    let temporal = temporal_split(reports.iter().copied(), ctx.config.temporal_cutoff);
    let leak = leak_split(reports.iter().copied(), ctx.config.leak_cutoff);
    for (name, split, kind) in [
        ("temporal", &temporal, SplitKind::Temporal { cutoff: temporal.cutoff }),
        ("leak", &leak, SplitKind::Leak { cutoff: leak.cutoff }),
    ] {
        if split.is_degenerate() {
            eprintln!("warning: {name} split at {} leaves one side empty; omitted", split.cutoff);
        } else {
            specs.push(split.to_spec(name, kind));
        }
    }
    let out = ctx.output(out, None, "splits.jsonl");
    write_text(&out, jsonl(&specs)?)?;
    for spec in &specs {
        println!(
            "{:<10} retrieval {:<5} test {}",
            spec.split_id,
            spec.members(Partition::Retrieval).len(),
            spec.members(Partition::Test).len()
        );
    }
    ctx.record("evaluate splits", seed, &[&corpus_path, &labels_path], &[&out])
}

#[derive(Serialize)]
struct BaselineRun {
    model: &'static str,
    metrics: MetricsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    loss_monotone: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_loss: Option<f64>,
}

fn baselines(
    ctx: &Context,
    corpus: Option<PathBuf>,
    labels: Option<PathBuf>,
    splits_path: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let (corpus_path, corpus) = ctx.load_corpus(corpus)?;
    let (labels_path, labels) = ctx.load_labels(labels)?;
    let splits_path = ctx.input(splits_path, None, "splits.jsonl", "split file")?;
    let truth = truth(&labels);
    let specs: Vec<SplitSpec> = read_records(&splits_path, "split file")?;
    let mut runs: Vec<BaselineRun> = Vec::new();
    for spec in &specs {
        let side = |partition: Partition| -> Vec<(&BugReport, Label)> {
            spec.members(partition).into_iter().filter_map(|k| Some((corpus.get(k)?, *truth.get(k)?))).collect()
        };
        let (train, test) = (side(Partition::Retrieval), side(Partition::Test));
        if train.is_empty() || test.is_empty() {
            eprintln!("warning: split {} has an empty side after labeling; skipped", spec.split_id);
            continue;
        }
        let texts: Vec<String> = train.iter().map(|(r, _)| r.text()).collect();
        let tfidf = TfIdf::fit(&texts)?;
        let x_train: Vec<_> = texts.iter().map(|t| tfidf.transform(t)).collect();
        let y_train: Vec<Label> = train.iter().map(|(_, l)| *l).collect();
        let x_test: Vec<_> = test.iter().map(|(r, _)| tfidf.transform(&r.text())).collect();
        let test_truth: BTreeMap<ReportKey, Label> = test.iter().map(|(r, l)| (r.key(), *l)).collect();
        let split_id = Some(spec.split_id.as_str());

        match train_logreg(&x_train, &y_train, &ctx.config.logreg) {
            Ok((model, report)) => {
                let predictions = test.iter().zip(&x_test).map(|((r, _), x)| (r.key(), model.predict(x))).collect();
                runs.push(BaselineRun {
                    model: "logreg",
                    metrics: compute_metrics(&predictions, &test_truth)?.tagged(None, split_id),
                    loss_monotone: Some(report.monotone),
                    final_loss: report.losses.last().copied(),
                });
            }
            Err(e) => eprintln!("warning: logreg on {}: {e}", spec.split_id),
        }
        let k = ctx.config.knn_k.min(x_train.len());
        let predictions = test
            .iter()
            .zip(&x_test)
            .map(|((r, _), x)| Ok((r.key(), knn_predict(&x_train, &y_train, x, k)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        runs.push(BaselineRun {
            model: "knn",
            metrics: compute_metrics(&predictions, &test_truth)?.tagged(None, split_id),
            loss_monotone: None,
            final_loss: None,
        });
    }
    if runs.is_empty() {
        return Err(usage("no split produced a baseline run"));
    }
    let mut rows: Vec<(&str, MetricsReport)> = runs.iter().map(|r| (r.model, r.metrics.clone())).collect();
    for model in ["logreg", "knn"] {
        let reports: Vec<MetricsReport> = runs.iter().filter(|r| r.model == model).map(|r| r.metrics.clone()).collect();
        rows.extend(fold_summaries(&reports)?.into_iter().map(|r| (model, r)));
    }
    let mut csv = String::from("model,split_id,n,accuracy,precision,recall,f1,tp,fp,fn,tn\n");
    for (model, report) in &rows {
        // metrics_csv leaves the strategy column empty for baseline rows
        let line = metrics_csv(std::slice::from_ref(report));
        let body = line.lines().nth(1).unwrap_or_default();
        csv.push_str(model);
        csv.push_str(body);
        csv.push('\n');
        println!(
            "{:<7} {:<10} acc={:.4} f1={:.4}",
            model,
            report.split_id.as_deref().unwrap_or("-"),
            report.accuracy,
            report.f1
        );
    }
    let out = ctx.output(out, None, "baselines.csv");
    write_text(&out, csv)?;
    let json = out.with_extension("json");
    write_text(&json, serde_json::to_string_pretty(&runs)? + "\n")?;
    ctx.record("evaluate baselines", ctx.config.seed, &[&corpus_path, &labels_path, &splits_path], &[&out, &json])
}

fn savings(
    ctx: &Context,
    corpus: Option<PathBuf>,
    labels: Option<PathBuf>,
    verdicts: &Path,
    out: Option<PathBuf>,
) -> Result<()> {
    let (corpus_path, corpus) = ctx.load_corpus(corpus)?;
    let (labels_path, labels) = ctx.load_labels(labels)?;
    let truth = truth(&labels);
    let records: Vec<VerdictRecord> = read_records(verdicts, "verdict log")?;
    let predictions: BTreeMap<ReportKey, Label> =
        records.iter().filter_map(|r| r.label.map(|l| (r.report_id.clone(), l))).collect();
    let latencies: Vec<u64> = records.iter().map(|r| r.latency_ms).collect();
    let flagged = correctly_flagged(&predictions, &truth);
    let effort = flagged
        .iter()
        .filter_map(|k| corpus.get(k))
        .map(|r| Ok((r.key(), compute_effort(r)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let estimate = estimate_savings(&flagged, &effort, &latencies).map_err(usage)?;
    let out = ctx.output(out, None, "savings.json");
    write_text(&out, serde_json::to_string_pretty(&estimate)? + "\n")?;
    println!(
        "{} correctly flagged false positives; mean close time {:.2} days, {:.1} hours in total, {:.2} comments each",
        estimate.reports, estimate.mean_close_days, estimate.total_hours, estimate.mean_comments
    );
    ctx.record("evaluate savings", ctx.config.seed, &[&corpus_path, &labels_path, verdicts], &[&out])
}
