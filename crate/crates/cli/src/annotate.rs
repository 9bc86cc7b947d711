use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use chrono::{DateTime, Utc};
use fptriage::annotate::{
    cohen_kappa, final_labels, preannotate, read_jsonl, Decision, Judge, Label, ManualVerdict, PreLabel,
};
use fptriage::corpus::{select_candidates, CandidateKind, ReportKey};
use fptriage::taxonomy::RootCauseSubcategory;
use fptriage::triage::{MockClient, ModelClient, ReplayClient};
use serde::Serialize;

use crate::common::{jsonl, live_model, usage, write_text, Context};

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Ask two or more model judges to pre-label every selection candidate.
    Prelabel {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// `mock:<id>`, `replay:<id>=<file>` or `live:<model>`; repeat for each judge.
        #[arg(long = "judge", required = true)]
        judges: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Append one manual verdict to the verdict log.
    Record {
        /// Report key, e.g. `bugzilla:12345`.
        #[arg(long)]
        report: String,
        #[arg(long)]
        annotator: String,
        /// `genuine_bug`, `false_positive` or `excluded`.
        #[arg(long)]
        label: String,
        /// Exclusion reason; required with `--label excluded`.
        #[arg(long)]
        reason: Option<String>,
        #[arg(long, default_value_t = 1)]
        round: u32,
        #[arg(long, default_value = "")]
        rationale: String,
        /// Root-cause subcategory in snake_case, e.g. `firmware_issues`.
        #[arg(long)]
        root_cause: Option<String>,
        /// RFC 3339 timestamp; defaults to now.
        #[arg(long)]
        at: Option<DateTime<Utc>>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Cohen's kappa between two annotators within one round.
    Kappa {
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        round: u32,
        /// The two annotators to compare; defaults to the only two in the round.
        #[arg(long, value_delimiter = ',')]
        annotators: Vec<String>,
    },
    /// Merge pre-labels and manual verdicts into the final labels file.
    Merge {
        #[arg(long)]
        prelabels: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(ctx: &Context, cmd: Command) -> Result<()> {
    match cmd {
        Command::Prelabel { corpus, judges, out } => prelabel(ctx, corpus, &judges, out),
        Command::Record { report, annotator, label, reason, round, rationale, root_cause, at, log } => {
            let report_id: ReportKey = report.parse().map_err(usage)?;
            let label = match label.as_str() {
                "excluded" => Decision::Excluded(reason.ok_or_else(|| usage("--label excluded needs --reason"))?),
                other => other.parse::<Label>().map_err(usage)?.into(),
            };
            let root_cause = root_cause
                .map(|s| serde_json::from_value::<RootCauseSubcategory>(serde_json::Value::String(s.clone())))
                .transpose()
                .map_err(|e| usage(format!("--root-cause: {e}")))?;
            let verdict = ManualVerdict {
                report_id,
                annotator_id: annotator,
                label,
                rationale,
                round,
                timestamp: at.unwrap_or_else(Utc::now),
                root_cause,
            };
            verdict.validate().map_err(usage)?;
            let path = verdict_log(ctx, log);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .with_context(|| format!("opening {}", path.display()))?;
            writeln!(file, "{}", serde_json::to_string(&verdict)?)?;
            println!("recorded {} for {} (round {})", verdict.annotator_id, verdict.report_id, verdict.round);
            Ok(())
        }
        Command::Kappa { log, round, annotators } => kappa(ctx, log, round, annotators),
        Command::Merge { prelabels, log, out } => merge(ctx, prelabels, log, out),
    }
}

fn verdict_log(ctx: &Context, explicit: Option<PathBuf>) -> PathBuf {
    ctx.output(explicit, ctx.config.verdict_log.as_ref(), "manual_verdicts.jsonl")
}

fn read_log<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(file).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn judge_client(ctx: &Context, spec: &str) -> Result<(String, Box<dyn ModelClient>)> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| usage(format!("judge `{spec}` lacks a kind prefix")))?;
    match kind {
        "mock" => Ok((rest.to_string(), Box::new(MockClient))),
        "replay" => {
            let (id, file) =
                rest.split_once('=').ok_or_else(|| usage(format!("judge `{spec}` needs `<id>=<file>`")))?;
            let path = Path::new(file);
            if !path.exists() {
                return Err(usage(format!("replay file {file} does not exist")));
            }
            Ok((id.to_string(), Box::new(ReplayClient::from_jsonl(id, path)?)))
        }
        "live" => Ok((rest.to_string(), live_model(ctx, Some(rest))?)),
        other => Err(usage(format!("unknown judge kind `{other}`"))),
    }
}

fn prelabel(ctx: &Context, corpus: Option<PathBuf>, specs: &[String], out: Option<PathBuf>) -> Result<()> {
    let (corpus_path, corpus) = ctx.load_corpus(corpus)?;
    let clients = specs.iter().map(|s| judge_client(ctx, s)).collect::<Result<Vec<_>>>()?;
    let judges: Vec<Judge<'_>> = clients.iter().map(|(id, c)| Judge { id: id.clone(), client: c.as_ref() }).collect();
    if judges.len() < 2 {
        return Err(usage(format!("at least two judges are required, got {}", judges.len())));
    }
    let candidates = select_candidates(&corpus);
    let mut prelabels: Vec<PreLabel> = Vec::new();
    let mut failures = Vec::new();
    for (key, kind) in &candidates {
        if matches!(kind, CandidateKind::Excluded(_)) {
            continue;
        }
        let report = corpus.get(key).expect("candidate comes from corpus");
        match preannotate(report, &judges) {
            Ok(p) => prelabels.push(p),
            Err(e) => failures.push(format!("{key}: {e}")),
        }
    }
    let out = ctx.output(out, None, "prelabels.jsonl");
    write_text(&out, jsonl(&prelabels)?)?;
    let mut by_consensus: BTreeMap<String, usize> = BTreeMap::new();
    for p in &prelabels {
        *by_consensus
            .entry(serde_json::to_value(p.consensus)?.as_str().unwrap_or_default().to_string())
            .or_default() += 1;
    }
    let summary: Vec<String> = by_consensus.iter().map(|(k, v)| format!("{k} {v}")).collect();
    println!("pre-labeled {} reports: {}", prelabels.len(), summary.join(", "));
    ctx.record("annotate prelabel", ctx.config.seed, &[&corpus_path], &[&out])?;
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("warning: {f}");
        }
        anyhow::bail!("{} reports could not be pre-labeled", failures.len());
    }
    Ok(())
}

#[derive(Serialize)]
struct KappaOutput {
    round: u32,
    annotators: [String; 2],
    kappa: f64,
    observed: f64,
    expected: f64,
    n: usize,
    degenerate: bool,
}

fn category(decision: &Decision) -> &'static str {
    match decision {
        Decision::GenuineBug => "genuine_bug",
        Decision::FalsePositive => "false_positive",
        Decision::Excluded(_) => "excluded",
    }
}

fn kappa(ctx: &Context, log: Option<PathBuf>, round: u32, annotators: Vec<String>) -> Result<()> {
    let path = verdict_log(ctx, log);
    if !path.exists() {
        return Err(usage(format!("verdict log {} does not exist", path.display())));
    }
    let verdicts: Vec<ManualVerdict> = read_log(&path)?;
    let in_round: Vec<&ManualVerdict> = verdicts.iter().filter(|v| v.round == round).collect();
    let pair: [String; 2] = match annotators.as_slice() {
        [a, b] => [a.clone(), b.clone()],
        [] => {
            let seen: BTreeSet<&str> = in_round.iter().map(|v| v.annotator_id.as_str()).collect();
            let seen: Vec<&str> = seen.into_iter().collect();
            match seen.as_slice() {
                [a, b] => [a.to_string(), b.to_string()],
                _ => return Err(usage(format!("round {round} has {} annotators; pass --annotators a,b", seen.len()))),
            }
        }
        _ => return Err(usage("--annotators takes exactly two ids")),
    };
    // the last entry per (annotator, report) wins
    let latest = |who: &str| -> BTreeMap<&ReportKey, &'static str> {
        in_round.iter().filter(|v| v.annotator_id == who).map(|v| (&v.report_id, category(&v.label))).collect()
    };
    let (a, b) = (latest(&pair[0]), latest(&pair[1]));
    let shared: Vec<&&ReportKey> = a.keys().filter(|k| b.contains_key(*k)).collect();
    let xs: Vec<&str> = shared.iter().map(|k| a[**k]).collect();
    let ys: Vec<&str> = shared.iter().map(|k| b[**k]).collect();
    let result = cohen_kappa(&xs, &ys)?;
    let out = ctx.results.join(format!("kappa-round{round}.json"));
    let output = KappaOutput {
        round,
        annotators: pair,
        kappa: result.kappa,
        observed: result.observed,
        expected: result.expected,
        n: result.n,
        degenerate: result.degenerate,
    };
    write_text(&out, serde_json::to_string_pretty(&output)? + "\n")?;
    println!("round {round}: kappa {:.4} over {} reports", result.kappa, result.n);
    ctx.record(&format!("annotate kappa round {round}"), ctx.config.seed, &[&path], &[&out])
}

fn merge(ctx: &Context, prelabels: Option<PathBuf>, log: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let log = verdict_log(ctx, log);
    if !log.exists() {
        return Err(usage(format!("verdict log {} does not exist", log.display())));
    }
    let manual: Vec<ManualVerdict> = read_log(&log)?;
    let pre: Vec<PreLabel> = match &prelabels {
        Some(p) if !p.exists() => return Err(usage(format!("pre-label file {} does not exist", p.display()))),
        Some(p) => read_log(p)?,
        None => Vec::new(),
    };
    let records = final_labels(&pre, &manual).map_err(usage)?;
    let out = ctx.output(out, ctx.config.labels.as_ref(), "labels.jsonl");
    write_text(&out, jsonl(&records)?)?;
    let count = |f: fn(&Decision) -> bool| records.iter().filter(|r| f(&r.label)).count();
    println!(
        "labels: {} genuine, {} false positive, {} excluded",
        count(|d| *d == Decision::GenuineBug),
        count(|d| *d == Decision::FalsePositive),
        count(|d| matches!(d, Decision::Excluded(_)))
    );
    let mut inputs: Vec<&Path> = vec![&log];
    if let Some(p) = &prelabels {
        inputs.push(p);
    }
    ctx.record("annotate merge", ctx.config.seed, &inputs, &[&out])
}
