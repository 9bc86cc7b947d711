use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context as _, Result};
use fptriage::annotate::Label;
use fptriage::corpus::{BugReport, Source};
use fptriage::retrieval::{build_knowledge_base, write_store};

use crate::common::{embedder, truth, usage, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Use the offline hashing embedder instead of the configured endpoint.
    #[arg(long)]
    mock_embedder: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let (corpus_path, corpus) = ctx.load_corpus(args.corpus)?;
    let (labels_path, labels) = ctx.load_labels(args.labels)?;
    let entries: Vec<(&BugReport, Label)> = truth(&labels)
        .into_iter()
        .filter(|(k, _)| k.source == Source::Bugzilla)
        .filter_map(|(k, l)| corpus.get(&k).map(|r| (r, l)))
        .collect();
    if entries.is_empty() {
        return Err(usage("no labeled Bugzilla reports to index"));
    }
    let embedder = embedder(ctx, args.mock_embedder)?;
    let kb = build_knowledge_base(&entries, embedder.as_ref(), ctx.config.char_budget, ctx.config.embed_in_flight)?;
    let out = ctx.output(args.out, ctx.config.vector_store.as_ref(), "kb.fpkb");
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    write_store(BufWriter::new(file), &kb)?;
    println!(
        "knowledge base: {} entries ({} genuine, {} false positive), dim {}, embedder {}",
        kb.len(),
        kb.count(Label::GenuineBug),
        kb.count(Label::FalsePositive),
        kb.dim(),
        kb.embedder_id()
    );
    ctx.record("kb-build", ctx.config.seed, &[&corpus_path, &labels_path], &[&out])
}
