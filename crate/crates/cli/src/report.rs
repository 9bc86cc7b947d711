use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;

use crate::common::{usage, write_text, Context};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    out: Option<PathBuf>,
}

const TABLES: [(&str, &str); 7] = [
    ("effort_summary.csv", "Effort by label"),
    ("tests.csv", "False-positive vs genuine effort tests"),
    ("components.csv", "False positives by component"),
    ("root_causes.csv", "Root causes by component"),
    ("metrics.csv", "Prompting strategies"),
    ("baselines.csv", "Feature baselines"),
    ("splits", "Splits"),
];

/// Splits one CSV line, honoring double-quoted fields.
fn fields(line: &str) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                chars.next();
                out.last_mut().unwrap().push('"');
            }
            '"' => quoted = !quoted,
            ',' if !quoted => out.push(String::new()),
            c => out.last_mut().unwrap().push(c),
        }
    }
    out
}

fn markdown_table(csv: &str) -> String {
    let mut out = String::new();
    for (i, line) in csv.lines().filter(|l| !l.is_empty()).enumerate() {
        let cells: Vec<String> = fields(line).into_iter().map(|c| c.replace('|', "\\|")).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
        if i == 0 {
            let _ = writeln!(out, "|{}", "---|".repeat(cells.len()));
        }
    }
    out
}

fn kappa_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("kappa-round")))
        .collect();
    files.sort();
    files
}

pub fn run(ctx: &Context, args: Args) -> Result<()> {
    let dir = &ctx.results;
    if !dir.is_dir() {
        return Err(usage(format!("results directory {} does not exist", dir.display())));
    }
    let mut md = String::from("# False-positive triage report\n");
    let mut inputs = Vec::new();
    for path in kappa_files(dir) {
        let text = fs::read_to_string(&path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let _ = writeln!(
            md,
            "\n## Agreement, round {}\n\nkappa = {:.4} over {} reports\n",
            value["round"],
            value["kappa"].as_f64().unwrap_or(f64::NAN),
            value["n"]
        );
        inputs.push(path);
    }
    for (file, title) in TABLES {
        let path = dir.join(file);
        let Ok(csv) = fs::read_to_string(&path) else { continue };
        let _ = write!(md, "\n## {title}\n\n{}", markdown_table(&csv));
        inputs.push(path);
    }
    let savings = dir.join("savings.json");
    if let Ok(text) = fs::read_to_string(&savings) {
        let _ = write!(md, "\n## Savings estimate\n\n```json\n{}```\n", text);
        inputs.push(savings);
    }
    let guidelines = dir.join("guidelines.txt");
    if let Ok(text) = fs::read_to_string(&guidelines) {
        let _ = write!(md, "\n## Guidelines\n\n```text\n{}```\n", text);
        inputs.push(guidelines);
    }
    if inputs.is_empty() {
        return Err(usage(format!("nothing to report in {}", dir.display())));
    }
    let out = args.out.unwrap_or_else(|| dir.join("report.md"));
    write_text(&out, md)?;
    println!("wrote {} from {} result files", out.display(), inputs.len());
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    ctx.record("report", ctx.config.seed, &inputs, &[&out])
}
