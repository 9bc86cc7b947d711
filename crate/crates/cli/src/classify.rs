use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use fptriage::annotate::read_jsonl;
use fptriage::corpus::BugReport;
use fptriage::eval::{Partition, SplitSpec};
use fptriage::retrieval::{read_store, KnowledgeBase};
use fptriage::triage::{Exemplar, PromptStrategy, RetrievalSetup, TemplateSet, TriageError, TriagePipeline};

use crate::common::{embedder, jsonl, model_client, read_text, truth, usage, write_text, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// basic-zero-shot, enhanced-zero-shot, few-shot, cot or rag.
    #[arg(long)]
    strategy: PromptStrategy,
    /// Offline keyword client.
    #[arg(long, conflicts_with = "replay")]
    mock_client: bool,
    /// Recorded responses keyed by prompt digest.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Knowledge-base file for rag.
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    mock_embedder: bool,
    #[arg(long)]
    k_per_class: Option<usize>,
    /// Guideline text for the enhanced zero-shot prompt.
    #[arg(long)]
    guidelines: Option<PathBuf>,
    /// JSONL exemplars replacing the shipped few-shot pair.
    #[arg(long)]
    exemplars: Option<PathBuf>,
    /// Split file from `evaluate splits`; classifies the test side of `--split-id`.
    #[arg(long, requires = "split_id")]
    split: Option<PathBuf>,
    #[arg(long, requires = "split")]
    split_id: Option<String>,
    /// Restrict classification to labeled reports.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn load_split(path: &Path, split_id: &str) -> Result<SplitSpec> {
    if !path.exists() {
        return Err(usage(format!("split file {} does not exist", path.display())));
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let specs: Vec<SplitSpec> = read_jsonl(file).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    specs
        .into_iter()
        .find(|s| s.split_id == split_id)
        .ok_or_else(|| usage(format!("split `{split_id}` not found in {}", path.display())))
}

fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    if !path.exists() {
        return Err(usage(format!("knowledge base {} does not exist", path.display())));
    }
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_store(BufReader::new(file))?)
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let (corpus_path, corpus) = ctx.load_corpus(args.corpus.clone())?;
    let mut inputs: Vec<PathBuf> = vec![corpus_path];
    let mut selected: Vec<&BugReport> = match &args.labels {
        Some(path) => {
            let (path, labels) = ctx.load_labels(Some(path.clone()))?;
            inputs.push(path);
            truth(&labels).keys().filter_map(|k| corpus.get(k)).collect()
        }
        None => corpus.reports().collect(),
    };
    let split = match (&args.split, &args.split_id) {
        (Some(path), Some(id)) => {
            inputs.push(path.clone());
            Some(load_split(path, id)?)
        }
        _ => None,
    };
    if let Some(spec) = &split {
        selected.retain(|r| spec.assignment.get(&r.key()) == Some(&Partition::Test));
    }
    if selected.is_empty() {
        return Err(usage("no reports to classify"));
    }

    let kb_path = args.kb.clone().or_else(|| ctx.config.vector_store.clone().filter(|p| p.exists()));
    if args.strategy == PromptStrategy::Rag && kb_path.is_none() {
        let err = TriageError::MissingContext { strategy: args.strategy, what: "knowledge base".into() };
        return Err(usage(format!("{err}; pass --kb")));
    }
    let kb = match (&kb_path, args.strategy) {
        (Some(path), PromptStrategy::Rag) => {
            inputs.push(path.clone());
            let kb = load_kb(path)?;
            Some(match &split {
                Some(spec) => kb.subset(spec.members(Partition::Retrieval)),
                None => kb,
            })
        }
        _ => None,
    };
    let embedder = match &kb {
        Some(kb) => {
            let embedder = embedder(ctx, args.mock_embedder)?;
            if embedder.embedder_id() != kb.embedder_id() {
                return Err(usage(format!(
                    "knowledge base was built with `{}`, not `{}`",
                    kb.embedder_id(),
                    embedder.embedder_id()
                )));
            }
            Some(embedder)
        }
        None => None,
    };

    let client = model_client(ctx, args.mock_client, args.replay.as_deref())?;
    if let Some(path) = &args.replay {
        inputs.push(path.clone());
    }
    let mut pipeline = TriagePipeline::new(args.strategy, client.as_ref());
    pipeline.retry = ctx.config.retry;
    if let Some(dir) = &ctx.config.templates_dir {
        pipeline.templates = TemplateSet::with_overrides(dir).map_err(usage)?;
    }
    if let Some(path) = &args.guidelines {
        pipeline.guidelines = Some(read_text(path).map_err(|e| usage(format!("{e:#}")))?);
        inputs.push(path.clone());
    }
    if let Some(path) = args.exemplars.as_ref().or(ctx.config.exemplars.as_ref()) {
        let file = File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        pipeline.exemplars = read_jsonl::<Exemplar, _>(file).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        inputs.push(path.clone());
    }
    if let (Some(kb), Some(embedder)) = (&kb, &embedder) {
        pipeline.retrieval = Some(RetrievalSetup {
            kb,
            embedder: embedder.as_ref(),
            k_per_class: args.k_per_class.unwrap_or(ctx.config.k_per_class),
            char_budget: ctx.config.char_budget,
        });
    }

    let split_id = args.split_id.as_deref();
    let outcomes = pipeline.record_batch(&selected, split_id, ctx.config.model_in_flight);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (report, outcome) in selected.iter().zip(outcomes) {
        match outcome {
            Ok(record) => records.push(record),
            Err(e @ TriageError::MissingContext { .. }) => return Err(usage(e)),
            Err(e) => failures.push(format!("{}: {e}", report.key())),
        }
    }
    let name = match split_id {
        Some(id) => format!("verdicts-{}-{id}.jsonl", args.strategy),
        None => format!("verdicts-{}.jsonl", args.strategy),
    };
    let out = ctx.output(args.out, None, &name);
    write_text(&out, jsonl(&records)?)?;

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in &records {
        let key = r.label.map_or("unparsed".to_string(), |l| l.marker().to_string());
        *counts.entry(key).or_default() += 1;
    }
    println!(
        "{} classified {} reports with {}: {}",
        args.strategy,
        records.len(),
        client.model_id(),
        counts.iter().map(|(k, v)| format!("{k} {v}")).collect::<Vec<_>>().join(", ")
    );
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    ctx.record(&format!("classify {}", name.trim_end_matches(".jsonl")), ctx.config.seed, &inputs, &[&out])?;
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("warning: {f}");
        }
        anyhow::bail!("{} of {} reports failed to classify", failures.len(), selected.len());
    }
    Ok(())
}
