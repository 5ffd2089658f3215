//! Command-line front end. Every subcommand writes its reports into
//! `--output-dir`; outputs depend only on the flags and inputs.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::attributes::compute_attributes;
use crate::analysis::gold::{build_gold_pairs, test_h1, HypothesisResult};
use crate::analysis::synth::{synthesize_alpha_with, write_removal_log, Direction, SynthesisConfig};
use crate::analysis::tune::{default_grid, tune_lambda};
use crate::concepts::Stopwords;
use crate::corpus::{load_annotations, load_corpus, write_corpus, Corpus, MatrixScope};
use crate::error::{Error, Result};
use crate::rouge::{score_summaries, write_report_csv, Metric};
use crate::solver::{SolveMode, SolverOptions, DEFAULT_NODE_LIMIT};
use crate::summarize::{summary_from_json_line, summary_to_json_line, Summarizer, SummarizerSettings, Summary, System};

const TUNING_OBJECTIVE: &str = "mean ROUGE-1 recall over training tasks";

#[derive(Debug, Parser)]
#[command(name = "covsum", version, about = "Concept-coverage extractive summarization")]
pub struct Cli {
    /// Worker threads for task-parallel stages (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize every task of a corpus with one system.
    Summarize(SummarizeArgs),
    /// Score system summaries against the corpus references.
    Evaluate(EvaluateArgs),
    /// Leave-one-task-out lambda selection for ilp_mc.
    Tune(TuneArgs),
    /// Test whether completed scores separate related from unrelated pairs.
    Intrinsic(IntrinsicArgs),
    /// Write a corpus variant with a shifted alpha_{b=1}.
    Synthesize(SynthesizeArgs),
    /// Corpus attribute report.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaArg {
    Value(f64),
    Tune,
}

impl std::str::FromStr for LambdaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "tune" {
            return Ok(LambdaArg::Tune);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(LambdaArg::Value(v)),
            _ => Err(format!("lambda must be a non-negative number or `tune`, got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Minimum corpus frequency of a concept bigram.
    #[arg(long, default_value_t = 2)]
    pub min_freq: usize,
    /// Overrides the corpus's matrix scope (`corpus` or `per_task`).
    #[arg(long)]
    pub matrix_scope: Option<MatrixScope>,
    /// Overrides every task's word budget.
    #[arg(long)]
    pub length_budget: Option<usize>,
    #[arg(long, default_value = "exact")]
    pub solver_mode: SolveMode,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    pub node_limit: u64,
    /// Iteration cap of the matrix completion.
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Recorded in the manifest; no summarizer draws random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub system: System,
    /// Completion lambda for ilp_mc, or `tune` for per-fold selection.
    #[arg(long)]
    pub lambda: Option<LambdaArg>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// One or more summaries.jsonl files.
    #[arg(long, required = true, num_args = 1..)]
    pub summaries: Vec<PathBuf>,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Comma-separated lambda grid (default 0,0.5,...,5).
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct IntrinsicArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub direction: Direction,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Share of eligible targets acted on, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output_dir: PathBuf,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::Invalid("--jobs must be at least 1".into()));
        }
        // Fails only if a pool already exists, e.g. when called twice in-process.
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    match cli.command {
        Command::Summarize(a) => cmd_summarize(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Tune(a) => cmd_tune(&a),
        Command::Intrinsic(a) => cmd_intrinsic(&a),
        Command::Synthesize(a) => cmd_synthesize(&a),
        Command::Stats(a) => cmd_stats(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_summaries(path: &Path, summaries: &[Summary]) -> Result<()> {
    write_file(path, |w| {
        for s in summaries {
            writeln!(w, "{}", summary_to_json_line(s))?;
        }
        Ok(())
    })
}

/// Reads a summaries JSONL file; blank lines are skipped.
pub fn load_summaries(path: &Path) -> Result<Vec<Summary>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(summary_from_json_line(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_manifest(dir: &Path, command: &str, fields: Value) -> Result<()> {
    let mut manifest = json!({
        "tool": "covsum",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
    });
    if let (Value::Object(m), Value::Object(extra)) = (&mut manifest, fields) {
        m.extend(extra);
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join("manifest.json"), |w| writeln!(w, "{text}"))
}

fn stopwords_json(sw: &Stopwords) -> Value {
    json!({ "source": sw.source(), "sha256": sw.sha256(), "count": sw.len() })
}

struct Loaded {
    corpus: Corpus,
    corpus_sha256: String,
    stopwords: Arc<Stopwords>,
}

fn load(path: &Path) -> Result<Loaded> {
    let corpus = load_corpus(path)?;
    Ok(Loaded {
        corpus_sha256: file_sha256(path)?,
        corpus,
        stopwords: Arc::new(Stopwords::from_env()?),
    })
}

fn settings_for(p: &PipelineArgs, corpus: &Corpus) -> Result<SummarizerSettings> {
    if p.min_freq == 0 {
        return Err(Error::Invalid("--min-freq must be at least 1".into()));
    }
    let mut s = SummarizerSettings {
        min_freq: p.min_freq,
        matrix_scope: p.matrix_scope.unwrap_or(corpus.matrix_scope),
        solver: SolverOptions {
            mode: p.solver_mode,
            node_limit: p.node_limit,
        },
        length_budget: p.length_budget,
        ..Default::default()
    };
    s.completion.max_iters = p.max_iters;
    Ok(s)
}

fn base_manifest(p: &PipelineArgs, loaded: &Loaded, settings: &SummarizerSettings) -> Value {
    json!({
        "corpus": { "path": p.corpus.display().to_string(), "id": loaded.corpus.corpus_id, "sha256": loaded.corpus_sha256 },
        "stopwords": stopwords_json(&loaded.stopwords),
        "seed": p.seed,
        "settings": settings,
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(m), Value::Object(e)) = (&mut base, extra) {
        m.extend(e);
    }
    base
}

fn write_traces(dir: &Path, completions: &crate::summarize::Completions) -> Result<()> {
    for (b, c) in completions.iter().enumerate() {
        if let Some(c) = c {
            let name = if completions.len() == 1 {
                "completion_trace.csv".to_string()
            } else {
                format!("completion_trace_{b}.csv")
            };
            write_file(&dir.join(name), |w| c.write_trace_csv(w))?;
        }
    }
    Ok(())
}

pub fn cmd_summarize(a: &SummarizeArgs) -> Result<()> {
    let p = &a.pipeline;
    let loaded = load(&p.corpus)?;
    let settings = settings_for(p, &loaded.corpus)?;
    let summarizer = Summarizer::new(&loaded.corpus, settings.clone(), loaded.stopwords.clone())?;
    create_dir(&p.output_dir)?;

    let (summaries, lambda_json) = match (a.system, &a.lambda) {
        (System::IlpMc, None) => {
            return Err(Error::Invalid("--system ilp_mc needs --lambda".into()));
        }
        (System::IlpMc, Some(LambdaArg::Value(l))) => {
            let completions = summarizer.complete(*l)?;
            write_traces(&p.output_dir, &completions)?;
            (summarizer.run_with(System::IlpMc, Some(&completions))?, json!(l))
        }
        (System::IlpMc, Some(LambdaArg::Tune)) => {
            let tuned = tune_lambda(&summarizer, &default_grid())?;
            write_file(&p.output_dir.join("tune.csv"), |w| tuned.write_csv(w))?;
            let per_task: serde_json::Map<String, Value> =
                tuned.folds.iter().map(|f| (f.held_out.clone(), json!(f.lambda))).collect();
            (tuned.held_out_summaries(), json!({ "mode": "tune", "grid": tuned.grid, "objective": TUNING_OBJECTIVE, "per_task": per_task }))
        }
        (system, lambda) => {
            if lambda.is_some() {
                log::warn!("--lambda is ignored for {system}");
            }
            (summarizer.run(system, None)?, Value::Null)
        }
    };

    write_summaries(&p.output_dir.join("summaries.jsonl"), &summaries)?;
    let manifest = merge(
        base_manifest(p, &loaded, &settings),
        json!({ "system": a.system, "lambda": lambda_json, "tasks": summaries.len() }),
    );
    write_manifest(&p.output_dir, "summarize", manifest)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    create_dir(&a.output_dir)?;
    let mut reports = Vec::new();
    for path in &a.summaries {
        let summaries = load_summaries(path)?;
        if summaries.is_empty() {
            return Err(Error::Invalid(format!("{} holds no summaries", path.display())));
        }
        for s in &summaries {
            if corpus.task(&s.task_id).is_none() {
                return Err(Error::UnknownTask(s.task_id.clone()));
            }
        }
        let report = score_summaries(&corpus, &summaries)?;
        let m = &report.corpus_mean;
        println!(
            "{}\t{}\tR-1 {:.4}\tR-2 {:.4}\tR-SU4 {:.4}\tR-L {:.4} (F1)",
            corpus.corpus_id,
            report.system,
            m.get(Metric::Rouge1).f1,
            m.get(Metric::Rouge2).f1,
            m.get(Metric::RougeSu4).f1,
            m.get(Metric::RougeL).f1
        );
        reports.push(report);
    }
    write_file(&a.output_dir.join("rouge.csv"), |w| {
        for (k, r) in reports.iter().enumerate() {
            write_report_csv(r, &corpus.corpus_id, k == 0, &mut *w)?;
        }
        Ok(())
    })
}

pub fn cmd_tune(a: &TuneArgs) -> Result<()> {
    let p = &a.pipeline;
    let loaded = load(&p.corpus)?;
    let settings = settings_for(p, &loaded.corpus)?;
    let summarizer = Summarizer::new(&loaded.corpus, settings.clone(), loaded.stopwords.clone())?;
    let grid = a.grid.clone().unwrap_or_else(default_grid);
    let tuned = tune_lambda(&summarizer, &grid)?;
    create_dir(&p.output_dir)?;
    write_file(&p.output_dir.join("tune.csv"), |w| tuned.write_csv(w))?;
    write_file(&p.output_dir.join("tune_grid.csv"), |w| {
        writeln!(w, "lambda,task_id,r1_recall")?;
        for (g, row) in tuned.scores.iter().enumerate() {
            for (t, s) in row.iter().enumerate() {
                writeln!(w, "{},{},{}", tuned.grid[g], loaded.corpus.tasks[t].task_id, s)?;
            }
        }
        Ok(())
    })?;
    write_summaries(&p.output_dir.join("summaries.jsonl"), &tuned.held_out_summaries())?;
    println!("cross-validated ROUGE-1 recall: {:.4}", tuned.cv_score());
    let manifest = merge(
        base_manifest(p, &loaded, &settings),
        json!({ "grid": grid, "objective": TUNING_OBJECTIVE, "cv_r1_recall": tuned.cv_score() }),
    );
    write_manifest(&p.output_dir, "tune", manifest)
}

pub fn cmd_intrinsic(a: &IntrinsicArgs) -> Result<()> {
    let p = &a.pipeline;
    let loaded = load(&p.corpus)?;
    let settings = settings_for(p, &loaded.corpus)?;
    let annotations = load_annotations(&a.annotations, &loaded.corpus)?;
    let summarizer = Summarizer::new(&loaded.corpus, settings.clone(), loaded.stopwords.clone())?;
    let space = summarizer.space();
    if space.blocks.len() != 1 {
        return Err(Error::Invalid("intrinsic evaluation needs --matrix-scope corpus".into()));
    }
    let completions = summarizer.complete(a.lambda)?;
    let completed = completions[0]
        .as_ref()
        .ok_or_else(|| Error::Invalid("no concepts at this --min-freq".into()))?;
    let gold = build_gold_pairs(&annotations, &loaded.corpus, &loaded.stopwords);
    let report = test_h1(completed, &space.blocks[0].table, &gold)?;

    create_dir(&p.output_dir)?;
    write_traces(&p.output_dir, &completions)?;
    write_file(&p.output_dir.join("intrinsic.csv"), |w| {
        writeln!(w, "hypothesis,n,skipped,mean_pos,mean_neg,t,p,significant_05")?;
        for (name, h) in [("H1.a", &report.h1a), ("H1.b", &report.h1b)] {
            write_hypothesis_row(w, name, h)?;
        }
        Ok(())
    })?;
    write_file(&p.output_dir.join("gold_pairs.csv"), |w| {
        writeln!(w, "item,count")?;
        writeln!(w, "bigrams,{}", gold.n_bigrams())?;
        writeln!(w, "similar_pairs,{}", gold.similar.len())?;
        writeln!(w, "different_pairs,{}", gold.different.len())?;
        writeln!(w, "h1a_triples,{}", gold.triples_h1a.len())?;
        writeln!(w, "h1b_triples,{}", gold.triples_h1b.len())
    })?;
    let manifest = merge(base_manifest(p, &loaded, &settings), json!({ "lambda": a.lambda }));
    write_manifest(&p.output_dir, "intrinsic", manifest)
}

fn write_hypothesis_row(w: &mut impl Write, name: &str, h: &HypothesisResult) -> std::io::Result<()> {
    let (t, pv, sig) = match &h.ttest {
        Some(t) => (t.t_statistic.to_string(), t.p_value.to_string(), t.significant_05.to_string()),
        None => (String::new(), String::new(), String::new()),
    };
    writeln!(w, "{name},{},{},{},{},{t},{pv},{sig}", h.n, h.skipped, h.mean_pos, h.mean_neg)
}

pub fn cmd_synthesize(a: &SynthesizeArgs) -> Result<()> {
    let loaded = load(&a.corpus)?;
    let cfg = SynthesisConfig {
        direction: a.direction,
        seed: a.seed,
        fraction: a.fraction,
    };
    let result = synthesize_alpha_with(&loaded.corpus, &cfg, &loaded.stopwords)?;
    create_dir(&a.output_dir)?;
    write_file(&a.output_dir.join("corpus.jsonl"), |w| write_corpus(&result.corpus, w))?;
    write_file(&a.output_dir.join("removals.csv"), |w| write_removal_log(&result.removals, w))?;
    println!(
        "alpha_b=1: {} -> {} ({} sentences removed)",
        fmt_opt(result.alpha_before),
        fmt_opt(result.alpha_after),
        result.removals.len()
    );
    let manifest = json!({
        "corpus": { "path": a.corpus.display().to_string(), "id": loaded.corpus.corpus_id, "sha256": loaded.corpus_sha256 },
        "stopwords": stopwords_json(&loaded.stopwords),
        "direction": a.direction,
        "seed": a.seed,
        "fraction": a.fraction,
        "alpha_before": result.alpha_before,
        "alpha_after": result.alpha_after,
        "removed": result.removals.len(),
    });
    write_manifest(&a.output_dir, "synthesize", manifest)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

pub fn cmd_stats(a: &StatsArgs) -> Result<()> {
    let loaded = load(&a.corpus)?;
    let report = compute_attributes(&loaded.corpus, &loaded.stopwords)?;
    create_dir(&a.output_dir)?;
    write_file(&a.output_dir.join("attributes.csv"), |w| report.write_csv(w))?;
    let manifest = json!({
        "corpus": { "path": a.corpus.display().to_string(), "id": loaded.corpus.corpus_id, "sha256": loaded.corpus_sha256 },
        "stopwords": stopwords_json(&loaded.stopwords),
    });
    write_manifest(&a.output_dir, "stats", manifest)
}
