//! Summarization systems: coverage ILP, ILP over the completed matrix,
//! SumBasic and LexRank.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::completion::{complete, CompletedMatrix, CompletionConfig};
use crate::concepts::{build_concept_table, build_matrix, ConceptTable, CoocMatrix, Stopwords};
use crate::corpus::{Corpus, MatrixScope, Task};
use crate::error::{Error, Result};
use crate::solver::{solve_with, CoverageInstance, Selection, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    Ilp,
    IlpMc,
    Sumbasic,
    Lexrank,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Ilp => "ilp",
            System::IlpMc => "ilp_mc",
            System::Sumbasic => "sumbasic",
            System::Lexrank => "lexrank",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ilp" => Ok(System::Ilp),
            "ilp_mc" | "ilp-mc" => Ok(System::IlpMc),
            "sumbasic" => Ok(System::Sumbasic),
            "lexrank" => Ok(System::Lexrank),
            other => Err(format!("unknown system `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task_id: String,
    pub system: System,
    /// Selected sentences in original document order.
    pub sentence_ids: Vec<i64>,
    pub text: String,
    pub word_count: usize,
    pub meta: BTreeMap<String, Value>,
}

impl Summary {
    /// Builds a summary from positions into `task.sentences`.
    pub fn from_positions(
        task: &Task,
        system: System,
        mut positions: Vec<usize>,
        meta: BTreeMap<String, Value>,
    ) -> Self {
        positions.sort_unstable();
        positions.dedup();
        let sentences: Vec<_> = positions.iter().map(|&p| &task.sentences[p]).collect();
        Summary {
            task_id: task.task_id.clone(),
            system,
            sentence_ids: sentences.iter().map(|s| s.sentence_id).collect(),
            text: sentences
                .iter()
                .map(|s| s.raw_text.as_str())
                .collect::<Vec<_>>()
                .join(" "),
            word_count: sentences.iter().map(|s| s.word_count).sum(),
            meta,
        }
    }

    pub fn empty(task: &Task, system: System, meta: BTreeMap<String, Value>) -> Self {
        Summary::from_positions(task, system, Vec::new(), meta)
    }
}

/// Wire form of a summary line: `{"task_id","system","sentence_ids","text","meta"}`.
#[derive(Serialize, Deserialize)]
struct SummaryLine {
    task_id: String,
    system: System,
    sentence_ids: Vec<i64>,
    text: String,
    meta: BTreeMap<String, Value>,
}

pub fn summary_to_json_line(s: &Summary) -> String {
    serde_json::to_string(&SummaryLine {
        task_id: s.task_id.clone(),
        system: s.system,
        sentence_ids: s.sentence_ids.clone(),
        text: s.text.clone(),
        meta: s.meta.clone(),
    })
    .expect("summary serializes")
}

pub fn summary_from_json_line(line: &str) -> serde_json::Result<Summary> {
    let l: SummaryLine = serde_json::from_str(line)?;
    Ok(Summary {
        word_count: crate::corpus::word_count(&l.text),
        task_id: l.task_id,
        system: l.system,
        sentence_ids: l.sentence_ids,
        text: l.text,
        meta: l.meta,
    })
}

fn task_columns(task: &Task, sentence_ids: impl Fn(i64) -> Option<usize>) -> Result<Vec<usize>> {
    task.sentences
        .iter()
        .map(|s| {
            sentence_ids(s.sentence_id).ok_or(Error::DanglingSentence {
                sentence_id: s.sentence_id,
                context: format!("matrix for task `{}`", task.task_id),
            })
        })
        .collect()
}

fn selection_meta(sel: &Selection) -> BTreeMap<String, Value> {
    let mut meta = BTreeMap::new();
    meta.insert("objective".into(), json!(sel.objective));
    meta.insert("optimal".into(), json!(sel.optimal));
    meta.insert("nodes".into(), json!(sel.nodes));
    meta
}

/// Coverage ILP over the binary matrix columns of `task`, with the table's
/// (scope-global) concept weights.
pub fn summarize_ilp(
    task: &Task,
    table: &ConceptTable,
    matrix: &CoocMatrix,
    budget: usize,
    solver: &SolverOptions,
) -> Result<Summary> {
    if table.is_empty() {
        log::warn!("task `{}`: empty concept table, empty summary", task.task_id);
        let mut meta = BTreeMap::new();
        meta.insert("warning".into(), json!("empty concept table"));
        return Ok(Summary::empty(task, System::Ilp, meta));
    }
    let cols = task_columns(task, |id| matrix.column_of(id))?;
    let lengths = task.sentences.iter().map(|s| s.word_count).collect();
    let inst = CoverageInstance::from_binary(table.weights().to_vec(), matrix, &cols, lengths, budget)?;
    let sel = solve_with(&inst, solver);
    Ok(Summary::from_positions(
        task,
        System::Ilp,
        sel.chosen.clone(),
        selection_meta(&sel),
    ))
}

/// Coverage ILP with relaxed concept scores over the completed matrix.
pub fn summarize_ilp_mc(
    task: &Task,
    table: &ConceptTable,
    completed: &CompletedMatrix,
    budget: usize,
    solver: &SolverOptions,
) -> Result<Summary> {
    let mut meta = BTreeMap::new();
    meta.insert("lambda".into(), json!(completed.lambda));
    if table.is_empty() {
        log::warn!("task `{}`: empty concept table, empty summary", task.task_id);
        meta.insert("warning".into(), json!("empty concept table"));
        return Ok(Summary::empty(task, System::IlpMc, meta));
    }
    if completed.a_hat.nrows() != table.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} concept rows", table.len()),
            found: completed.a_hat.nrows().to_string(),
        });
    }
    let cols = task_columns(task, |id| completed.column_of(id))?;
    let lengths = task.sentences.iter().map(|s| s.word_count).collect();
    let inst = CoverageInstance::from_dense_columns(
        table.weights().to_vec(),
        &completed.a_hat,
        &cols,
        lengths,
        budget,
    )?;
    let sel = solve_with(&inst, solver);
    meta.extend(selection_meta(&sel));
    meta.insert("iterations".into(), json!(completed.iterations_run));
    meta.insert("converged".into(), json!(completed.converged));
    meta.insert("rank".into(), json!(completed.rank_estimate));
    Ok(Summary::from_positions(task, System::IlpMc, sel.chosen.clone(), meta))
}

/// SumBasic: unigram probabilities over non-stopword tokens; repeatedly take
/// the best-scoring sentence that contains the currently most probable word
/// and fits the budget, then square the probabilities of its words.
pub fn summarize_sumbasic(task: &Task, budget: usize, stopwords: &Stopwords) -> Summary {
    let content: Vec<Vec<&str>> = task
        .sentences
        .iter()
        .map(|s| {
            s.tokens
                .iter()
                .map(String::as_str)
                .filter(|t| !stopwords.contains(t))
                .collect()
        })
        .collect();
    let mut prob: BTreeMap<&str, f64> = BTreeMap::new();
    let mut total = 0usize;
    for words in &content {
        for w in words {
            *prob.entry(w).or_insert(0.0) += 1.0;
            total += 1;
        }
    }
    for p in prob.values_mut() {
        *p /= total.max(1) as f64;
    }

    let mut selected: Vec<usize> = Vec::new();
    let mut used = vec![false; task.sentences.len()];
    let mut remaining = budget;
    loop {
        let fits: Vec<usize> = (0..task.sentences.len())
            .filter(|&j| !used[j] && task.sentences[j].word_count <= remaining)
            .collect();
        if fits.is_empty() {
            break;
        }
        let mut words: Vec<(&str, f64)> = prob.iter().map(|(w, p)| (*w, *p)).collect();
        words.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));

        let score = |j: usize| -> f64 {
            let ws = &content[j];
            if ws.is_empty() {
                0.0
            } else {
                ws.iter().map(|w| prob[w]).sum::<f64>() / ws.len() as f64
            }
        };
        let mut pick = None;
        for (w, _) in &words {
            let mut best: Option<(usize, f64)> = None;
            for &j in &fits {
                if !content[j].contains(w) {
                    continue;
                }
                let s = score(j);
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((j, s));
                }
            }
            if let Some((j, _)) = best {
                pick = Some(j);
                break;
            }
        }
        let Some(j) = pick else { break };
        used[j] = true;
        remaining -= task.sentences[j].word_count;
        selected.push(j);
        let distinct: HashSet<&str> = content[j].iter().copied().collect();
        for w in distinct {
            if let Some(p) = prob.get_mut(w) {
                *p *= *p;
            }
        }
    }
    Summary::from_positions(task, System::Sumbasic, selected, BTreeMap::new())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexRankConfig {
    pub threshold: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for LexRankConfig {
    fn default() -> Self {
        LexRankConfig {
            threshold: 0.1,
            damping: 0.85,
            tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

fn tfidf_vectors(task: &Task) -> Vec<HashMap<&str, f64>> {
    let m = task.sentences.len() as f64;
    let mut df: HashMap<&str, usize> = HashMap::new();
    for s in &task.sentences {
        let distinct: HashSet<&str> = s.tokens.iter().map(String::as_str).collect();
        for w in distinct {
            *df.entry(w).or_insert(0) += 1;
        }
    }
    task.sentences
        .iter()
        .map(|s| {
            let mut v: HashMap<&str, f64> = HashMap::new();
            for t in &s.tokens {
                *v.entry(t.as_str()).or_insert(0.0) += 1.0;
            }
            for (w, x) in v.iter_mut() {
                *x *= (m / df[w] as f64).ln();
            }
            v
        })
        .collect()
}

fn cosine(a: &HashMap<&str, f64>, b: &HashMap<&str, f64>) -> f64 {
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(w, x)| b.get(w).map(|y| x * y))
        .sum();
    dot / (na * nb)
}

/// Stationary centrality of the thresholded cosine graph (self-loops
/// included). Rows without edges jump uniformly.
pub fn lexrank_centrality(task: &Task, cfg: &LexRankConfig) -> Vec<f64> {
    let m = task.sentences.len();
    if m == 0 {
        return Vec::new();
    }
    let vecs = tfidf_vectors(task);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..m {
        for j in 0..m {
            if cosine(&vecs[i], &vecs[j]) >= cfg.threshold {
                adj[i].push(j);
            }
        }
    }
    let uniform = 1.0 / m as f64;
    if adj.iter().all(Vec::is_empty) {
        return vec![uniform; m];
    }
    let mut p = vec![uniform; m];
    for _ in 0..cfg.max_iters {
        let dangling: f64 = (0..m).filter(|&i| adj[i].is_empty()).map(|i| p[i]).sum();
        let mut next = vec![(1.0 - cfg.damping) * uniform + cfg.damping * dangling * uniform; m];
        for i in 0..m {
            if adj[i].is_empty() {
                continue;
            }
            let share = cfg.damping * p[i] / adj[i].len() as f64;
            for &j in &adj[i] {
                next[j] += share;
            }
        }
        let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if delta < cfg.tol {
            break;
        }
    }
    p
}

/// LexRank: add sentences by descending centrality while they fit. Ties (to
/// 1e-12) keep document order.
pub fn summarize_lexrank(task: &Task, budget: usize, cfg: &LexRankConfig) -> Summary {
    let centrality = lexrank_centrality(task, cfg);
    let mut order: Vec<usize> = (0..task.sentences.len()).collect();
    order.sort_by_key(|&j| std::cmp::Reverse((centrality[j] * 1e12).round() as i64));
    let mut remaining = budget;
    let mut selected = Vec::new();
    for j in order {
        let len = task.sentences[j].word_count;
        if len <= remaining {
            remaining -= len;
            selected.push(j);
        }
    }
    Summary::from_positions(task, System::Lexrank, selected, BTreeMap::new())
}

/// A concept table and its binary matrix over a set of tasks.
#[derive(Clone, Debug)]
pub struct ConceptBlock {
    pub task_ids: Vec<String>,
    pub table: ConceptTable,
    pub matrix: CoocMatrix,
}

/// Concept tables and matrices for a corpus: a single block at corpus scope,
/// one block per task at per-task scope.
#[derive(Clone, Debug)]
pub struct ConceptSpace {
    pub scope: MatrixScope,
    pub blocks: Vec<ConceptBlock>,
    block_of: HashMap<String, usize>,
}

impl ConceptSpace {
    pub fn build(
        corpus: &Corpus,
        scope: MatrixScope,
        min_freq: usize,
        stopwords: Arc<Stopwords>,
    ) -> Result<Self> {
        let groups: Vec<Vec<String>> = match scope {
            MatrixScope::Corpus => vec![corpus.tasks.iter().map(|t| t.task_id.clone()).collect()],
            MatrixScope::PerTask => corpus.tasks.iter().map(|t| vec![t.task_id.clone()]).collect(),
        };
        let mut blocks = Vec::with_capacity(groups.len());
        let mut block_of = HashMap::new();
        for (b, task_ids) in groups.into_iter().enumerate() {
            let table = build_concept_table(corpus, &task_ids, min_freq, stopwords.clone())?;
            let sentences = task_ids
                .iter()
                .filter_map(|id| corpus.task(id))
                .flat_map(|t| t.sentences.iter());
            let matrix = build_matrix(&table, sentences);
            for id in &task_ids {
                block_of.insert(id.clone(), b);
            }
            blocks.push(ConceptBlock {
                task_ids,
                table,
                matrix,
            });
        }
        Ok(ConceptSpace {
            scope,
            blocks,
            block_of,
        })
    }

    pub fn block_index(&self, task_id: &str) -> Result<usize> {
        self.block_of
            .get(task_id)
            .copied()
            .ok_or_else(|| Error::UnknownTask(task_id.to_string()))
    }

    pub fn block_for(&self, task_id: &str) -> Result<&ConceptBlock> {
        Ok(&self.blocks[self.block_index(task_id)?])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummarizerSettings {
    pub min_freq: usize,
    pub matrix_scope: MatrixScope,
    pub solver: SolverOptions,
    pub completion: CompletionConfig,
    pub lexrank: LexRankConfig,
    /// Replaces every task's length budget when set.
    pub length_budget: Option<usize>,
}

impl Default for SummarizerSettings {
    fn default() -> Self {
        SummarizerSettings {
            min_freq: 2,
            matrix_scope: MatrixScope::Corpus,
            solver: SolverOptions::default(),
            completion: CompletionConfig::default(),
            lexrank: LexRankConfig::default(),
            length_budget: None,
        }
    }
}

/// Runs any system over the tasks of one corpus, sharing concept artifacts.
pub struct Summarizer<'a> {
    corpus: &'a Corpus,
    space: ConceptSpace,
    stopwords: Arc<Stopwords>,
    settings: SummarizerSettings,
}

/// Completed matrices, one per concept block (`None` for blocks without concepts).
pub type Completions = Vec<Option<CompletedMatrix>>;

impl<'a> Summarizer<'a> {
    pub fn new(corpus: &'a Corpus, settings: SummarizerSettings, stopwords: Arc<Stopwords>) -> Result<Self> {
        let space = ConceptSpace::build(corpus, settings.matrix_scope, settings.min_freq, stopwords.clone())?;
        Ok(Summarizer {
            corpus,
            space,
            stopwords,
            settings,
        })
    }

    pub fn corpus(&self) -> &Corpus {
        self.corpus
    }

    pub fn space(&self) -> &ConceptSpace {
        &self.space
    }

    pub fn settings(&self) -> &SummarizerSettings {
        &self.settings
    }

    pub fn budget(&self, task: &Task) -> usize {
        self.settings.length_budget.unwrap_or(task.length_budget)
    }

    /// Completes every block's matrix at the given lambda.
    pub fn complete(&self, lambda: f64) -> Result<Completions> {
        let cfg = CompletionConfig {
            lambda,
            ..self.settings.completion.clone()
        };
        self.space
            .blocks
            .par_iter()
            .map(|b| {
                if b.table.is_empty() {
                    Ok(None)
                } else {
                    complete(&b.matrix, &cfg).map(Some)
                }
            })
            .collect()
    }

    pub fn summarize_task(&self, task: &Task, system: System, completions: Option<&Completions>) -> Result<Summary> {
        let budget = self.budget(task);
        match system {
            System::Ilp => {
                let b = self.space.block_for(&task.task_id)?;
                summarize_ilp(task, &b.table, &b.matrix, budget, &self.settings.solver)
            }
            System::IlpMc => {
                let idx = self.space.block_index(&task.task_id)?;
                let b = &self.space.blocks[idx];
                let completions = completions.ok_or_else(|| {
                    Error::Invalid("ilp_mc needs completed matrices".into())
                })?;
                match completions.get(idx).and_then(Option::as_ref) {
                    Some(c) => summarize_ilp_mc(task, &b.table, c, budget, &self.settings.solver),
                    None => {
                        log::warn!("task `{}`: empty concept table, empty summary", task.task_id);
                        let mut meta = BTreeMap::new();
                        meta.insert("warning".into(), json!("empty concept table"));
                        Ok(Summary::empty(task, System::IlpMc, meta))
                    }
                }
            }
            System::Sumbasic => Ok(summarize_sumbasic(task, budget, &self.stopwords)),
            System::Lexrank => Ok(summarize_lexrank(task, budget, &self.settings.lexrank)),
        }
    }

    /// Summarizes every task. `lambda` is required for `ilp_mc` and ignored otherwise.
    pub fn run(&self, system: System, lambda: Option<f64>) -> Result<Vec<Summary>> {
        let completions = match system {
            System::IlpMc => {
                let lambda = lambda.ok_or_else(|| Error::Invalid("ilp_mc needs a lambda".into()))?;
                Some(self.complete(lambda)?)
            }
            _ => None,
        };
        self.run_with(system, completions.as_ref())
    }

    pub fn run_with(&self, system: System, completions: Option<&Completions>) -> Result<Vec<Summary>> {
        self.corpus
            .tasks
            .par_iter()
            .map(|t| self.summarize_task(t, system, completions))
            .collect()
    }
}
