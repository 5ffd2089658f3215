//! Corpus attributes describing the input documents and the reference
//! summaries.
//!
//! Size attributes (`M`, `N`, `M*N` and the per-task/per-sentence ratios) are
//! corpus totals. Distributional attributes (`s`, `b=1`, `H`, `r`, the alpha and
//! beta ratios) are computed per task from the task's own bigram frequencies
//! and then averaged over the tasks where they are defined. Frequencies count
//! token occurrences without any cutoff.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::concepts::{bigram_counts, extract_bigrams, tokenize, Bigram, Stopwords};
use crate::corpus::{Corpus, Genre, Task};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskAttributes {
    pub task_id: String,
    pub authors: usize,
    pub sentences: usize,
    pub bigrams: usize,
    pub words: usize,
    pub sparsity: Option<f64>,
    pub b1: Option<f64>,
    pub b_gt1: Option<f64>,
    pub shannon: Option<f64>,
    pub summary_length: Option<f64>,
    pub compression: Option<f64>,
    pub alpha: Option<AlphaRatios>,
    /// `beta[k-1]` for `b = k`, `k = 1..=4`.
    pub beta: [Option<f64>; 4],
    pub beta_gt1: Option<f64>,
}

/// Shares of the unique reference-summary bigrams by input frequency.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlphaRatios {
    pub gt0: f64,
    pub eq0: f64,
    pub eq1: f64,
    pub gt1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeReport {
    pub genre: Genre,
    pub t: usize,
    pub au: f64,
    pub m_times_n: f64,
    pub m: usize,
    pub n: usize,
    pub m_per_t: f64,
    pub n_per_t: f64,
    pub n_per_m: f64,
    pub w_per_t: f64,
    pub w_per_m: f64,
    pub s: f64,
    pub b1: f64,
    pub b_gt1: f64,
    pub h: f64,
    pub l: f64,
    pub hs: f64,
    pub r: f64,
    pub alpha_gt0: f64,
    pub alpha_eq0: f64,
    pub alpha_eq1: f64,
    pub alpha_gt1: f64,
    pub beta: [f64; 4],
    pub beta_gt1: f64,
    pub per_task: Vec<TaskAttributes>,
}

impl AttributeReport {
    /// `(id, name, value)` rows in the conventional table order.
    pub fn rows(&self) -> Vec<(u32, &'static str, String)> {
        let f = |x: f64| format!("{x}");
        vec![
            (1, "genre", self.genre.to_string()),
            (2, "T", self.t.to_string()),
            (3, "au", f(self.au)),
            (4, "M*N", f(self.m_times_n)),
            (5, "M", self.m.to_string()),
            (6, "N", self.n.to_string()),
            (7, "M/T", f(self.m_per_t)),
            (8, "N/T", f(self.n_per_t)),
            (9, "N/M", f(self.n_per_m)),
            (10, "W/T", f(self.w_per_t)),
            (11, "W/M", f(self.w_per_m)),
            (12, "s", f(self.s)),
            (13, "b=1", f(self.b1)),
            (14, "b>1", f(self.b_gt1)),
            (15, "H", f(self.h)),
            (16, "L", f(self.l)),
            (17, "hs", f(self.hs)),
            (18, "r", f(self.r)),
            (19, "alpha_b>0", f(self.alpha_gt0)),
            (20, "alpha_b=0", f(self.alpha_eq0)),
            (21, "alpha_b=1", f(self.alpha_eq1)),
            (22, "alpha_b>1", f(self.alpha_gt1)),
            (23, "beta_b=1", f(self.beta[0])),
            (24, "beta_b=2", f(self.beta[1])),
            (25, "beta_b=3", f(self.beta[2])),
            (26, "beta_b=4", f(self.beta[3])),
            (27, "beta_b>1", f(self.beta_gt1)),
        ]
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "id,name,value")?;
        for (id, name, value) in self.rows() {
            writeln!(out, "{id},{name},{value}")?;
        }
        Ok(())
    }
}

/// Input bigram frequencies of a task.
pub fn task_bigram_freq(task: &Task, stopwords: &Stopwords) -> BTreeMap<Bigram, usize> {
    let mut freq = BTreeMap::new();
    for s in &task.sentences {
        for (b, c) in bigram_counts(&s.tokens, stopwords) {
            *freq.entry(b).or_insert(0) += c;
        }
    }
    freq
}

/// Unique bigrams over all reference summaries of a task. Bigrams do not
/// cross summary sentence boundaries.
pub fn summary_bigrams(task: &Task, stopwords: &Stopwords) -> BTreeSet<Bigram> {
    task.human_summaries
        .iter()
        .flatten()
        .flat_map(|sent| extract_bigrams(&tokenize(sent), stopwords))
        .collect()
}

/// Alpha ratios of a task, `None` when its summaries hold no bigrams.
pub fn task_alpha(task: &Task, stopwords: &Stopwords) -> Option<AlphaRatios> {
    alpha_from(&summary_bigrams(task, stopwords), &task_bigram_freq(task, stopwords))
}

pub(crate) fn alpha_from(summary: &BTreeSet<Bigram>, freq: &BTreeMap<Bigram, usize>) -> Option<AlphaRatios> {
    if summary.is_empty() {
        return None;
    }
    let total = summary.len() as f64;
    let (mut eq0, mut eq1, mut gt1) = (0usize, 0usize, 0usize);
    for b in summary {
        match freq.get(b).copied().unwrap_or(0) {
            0 => eq0 += 1,
            1 => eq1 += 1,
            _ => gt1 += 1,
        }
    }
    Some(AlphaRatios {
        gt0: (eq1 + gt1) as f64 / total,
        eq0: eq0 as f64 / total,
        eq1: eq1 as f64 / total,
        gt1: gt1 as f64 / total,
    })
}

/// Corpus-mean `alpha_{b=1}` over tasks whose summaries hold bigrams.
pub fn alpha_b1(corpus: &Corpus, stopwords: &Stopwords) -> Option<f64> {
    mean(corpus.tasks.iter().filter_map(|t| task_alpha(t, stopwords).map(|a| a.eq1)))
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn task_attributes(task: &Task, stopwords: &Stopwords) -> TaskAttributes {
    let freq = task_bigram_freq(task, stopwords);
    let n_bigrams = freq.len();
    let total_occ: usize = freq.values().sum();

    let authors: BTreeSet<&str> = task
        .sentences
        .iter()
        .map(|s| s.author_id.as_deref().unwrap_or(&s.doc_id))
        .collect();

    let filled: usize = task
        .sentences
        .iter()
        .map(|s| bigram_counts(&s.tokens, stopwords).len())
        .sum();
    let cells = n_bigrams * task.sentences.len();
    let sparsity = ratio(cells - filled, cells);

    let once = freq.values().filter(|&&c| c == 1).count();
    let shannon = (total_occ > 0).then(|| {
        -freq
            .values()
            .map(|&c| {
                let p = c as f64 / total_occ as f64;
                p * p.ln()
            })
            .sum::<f64>()
    });

    let lengths = task.summary_word_counts();
    let words = task.total_words();
    let summary_length = mean(lengths.iter().map(|&l| l as f64));
    let compression = summary_length.and_then(|l| (words > 0).then(|| l / words as f64));

    let summary = summary_bigrams(task, stopwords);
    let alpha = alpha_from(&summary, &freq);
    let selected_with = |pred: &dyn Fn(usize) -> bool| -> Option<f64> {
        let pool: Vec<&Bigram> = freq.iter().filter(|(_, &c)| pred(c)).map(|(b, _)| b).collect();
        ratio(pool.iter().filter(|b| summary.contains(**b)).count(), pool.len())
    };
    let beta = [1, 2, 3, 4].map(|k| selected_with(&|c| c == k));
    let beta_gt1 = selected_with(&|c| c > 1);

    TaskAttributes {
        task_id: task.task_id.clone(),
        authors: authors.len(),
        sentences: task.sentences.len(),
        bigrams: n_bigrams,
        words,
        sparsity,
        b1: ratio(once, n_bigrams),
        b_gt1: ratio(n_bigrams - once, n_bigrams),
        shannon,
        summary_length,
        compression,
        alpha,
        beta,
        beta_gt1,
    }
}

/// Attributes of a corpus. Undefined per-task ratios are left out of the
/// averages; an average with no defined task is 0.
pub fn compute_attributes(corpus: &Corpus, stopwords: &Stopwords) -> Result<AttributeReport> {
    if corpus.tasks.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if corpus.tasks.iter().all(|t| t.human_summaries.is_empty()) {
        return Err(Error::Invalid("attributes need reference summaries".into()));
    }
    let per_task: Vec<TaskAttributes> = corpus.tasks.iter().map(|t| task_attributes(t, stopwords)).collect();

    let t = corpus.tasks.len();
    let m = corpus.n_sentences();
    let n = corpus
        .sentences()
        .flat_map(|s| extract_bigrams(&s.tokens, stopwords))
        .collect::<BTreeSet<_>>()
        .len();
    let w: usize = corpus.tasks.iter().map(Task::total_words).sum();
    let all_lengths: Vec<usize> = corpus.tasks.iter().flat_map(Task::summary_word_counts).collect();
    let n_summaries = all_lengths.len();

    let avg = |f: &dyn Fn(&TaskAttributes) -> Option<f64>| mean(per_task.iter().filter_map(f)).unwrap_or(0.0);
    let alpha = |f: fn(&AlphaRatios) -> f64| avg(&|a: &TaskAttributes| a.alpha.as_ref().map(f));

    Ok(AttributeReport {
        genre: corpus.genre,
        t,
        au: avg(&|a| Some(a.authors as f64)),
        m_times_n: m as f64 * n as f64,
        m,
        n,
        m_per_t: m as f64 / t as f64,
        n_per_t: n as f64 / t as f64,
        n_per_m: ratio(n, m).unwrap_or(0.0),
        w_per_t: w as f64 / t as f64,
        w_per_m: ratio(w, m).unwrap_or(0.0),
        s: avg(&|a| a.sparsity),
        b1: avg(&|a| a.b1),
        b_gt1: avg(&|a| a.b_gt1),
        h: avg(&|a| a.shannon),
        l: mean(all_lengths.iter().map(|&l| l as f64)).unwrap_or(0.0),
        hs: n_summaries as f64 / t as f64,
        r: avg(&|a| a.compression),
        alpha_gt0: alpha(|a| a.gt0),
        alpha_eq0: alpha(|a| a.eq0),
        alpha_eq1: alpha(|a| a.eq1),
        alpha_gt1: alpha(|a| a.gt1),
        beta: [0, 1, 2, 3].map(|k| avg(&|a| a.beta[k])),
        beta_gt1: avg(&|a| a.beta_gt1),
        per_task,
    })
}
