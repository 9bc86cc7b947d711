use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use clap::ValueEnum;
use fptriage::corpus::{ingest_bugzilla, ingest_syzkaller, read_corpus_file, write_corpus_file, BugReport, Corpus};
use fptriage::http::{BugzillaFetcher, SyzkallerFetcher};
use serde_json::Value;

use crate::common::{usage, Context};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceArg {
    Bugzilla,
    Syzkaller,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, value_enum)]
    source: SourceArg,
    /// Directory of recorded JSON payloads (one object or an array per file).
    #[arg(long, conflicts_with_all = ["ids", "query"])]
    fixtures: Option<PathBuf>,
    /// Comma-separated bug ids (Bugzilla) or extids (Syzkaller) to fetch live.
    #[arg(long, value_delimiter = ',')]
    ids: Vec<String>,
    /// Bugzilla search query string for live ingestion.
    #[arg(long)]
    query: Option<String>,
    /// Corpus file to create or merge into.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail with a usage error on the first malformed payload.
    #[arg(long)]
    strict: bool,
}

fn parse(source: SourceArg, raw: &Value) -> Result<BugReport> {
    Ok(match source {
        SourceArg::Bugzilla => ingest_bugzilla(raw)?,
        SourceArg::Syzkaller => ingest_syzkaller(raw)?,
    })
}

/// `(origin, payload)` pairs; unreadable files become warnings.
fn fixture_payloads(dir: &Path, warnings: &mut Vec<String>) -> Result<Vec<(String, Value)>> {
    if !dir.is_dir() {
        return Err(usage(format!("fixtures directory {} does not exist", dir.display())));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut payloads = Vec::new();
    for file in files {
        let name = file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Array(items)) => {
                payloads.extend(items.into_iter().enumerate().map(|(i, v)| (format!("{name}[{i}]"), v)))
            }
            Ok(value) => payloads.push((name, value)),
            Err(e) => warnings.push(format!("{name}: {e}")),
        }
    }
    Ok(payloads)
}

fn live_payloads(ctx: &Context, args: &Args) -> Result<Vec<(String, Value)>> {
    match args.source {
        SourceArg::Bugzilla => {
            let fetcher = BugzillaFetcher::new(&ctx.config.bugzilla_endpoint);
            let mut ids = args.ids.clone();
            if let Some(query) = &args.query {
                ids.extend(fetcher.search_ids(query)?);
            }
            if ids.is_empty() {
                return Err(usage("live ingestion needs --ids or --query"));
            }
            ids.iter().map(|id| Ok((id.clone(), fetcher.fetch(id)?))).collect()
        }
        SourceArg::Syzkaller => {
            if args.query.is_some() {
                return Err(usage("--query is only supported for bugzilla"));
            }
            if args.ids.is_empty() {
                return Err(usage("live syzkaller ingestion needs --ids"));
            }
            let fetcher = SyzkallerFetcher::new(&ctx.config.syzkaller_endpoint);
            args.ids.iter().map(|id| Ok((id.clone(), fetcher.fetch(id)?))).collect()
        }
    }
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let mut warnings = Vec::new();
    let payloads = match &args.fixtures {
        Some(dir) => fixture_payloads(dir, &mut warnings)?,
        None => live_payloads(ctx, &args)?,
    };
    let out = ctx.output(args.out.clone(), ctx.config.corpus.as_ref(), "corpus.jsonl");
    let mut corpus = if out.exists() {
        read_corpus_file(&out, ctx.config.window).with_context(|| format!("reading {}", out.display()))?
    } else {
        Corpus::new(ctx.config.window)
    };
    let before = corpus.len();
    let mut ingested = 0;
    for (origin, raw) in &payloads {
        match parse(args.source, raw).and_then(|r| Ok(corpus.upsert(r)?)) {
            Ok(()) => ingested += 1,
            Err(e) => warnings.push(format!("{origin}: {e}")),
        }
    }
    if args.strict && !warnings.is_empty() {
        return Err(usage(format!("malformed payload {}", warnings[0])));
    }
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_corpus_file(&out, &corpus).with_context(|| format!("writing {}", out.display()))?;
    println!("ingested {ingested}, new {}, total {}, warnings {}", corpus.len() - before, corpus.len(), warnings.len());
    let inputs: Vec<PathBuf> = match &args.fixtures {
        Some(dir) => {
            let mut files: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
            files.sort();
            files
        }
        None => Vec::new(),
    };
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    ctx.record("ingest", ctx.config.seed, &inputs, &[&out])
}
