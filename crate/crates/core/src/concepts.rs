//! Tokenization, bigram concepts, and the binary sentence-concept matrix.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Corpus, SentenceRecord};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Environment variable naming a stopword file that replaces the built-in list.
pub const STOPWORDS_ENV: &str = "COVSUM_STOPWORDS";

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Clone, Debug)]
pub struct Stopwords {
    words: HashSet<String>,
    sha256: String,
    source: String,
}

impl Stopwords {
    /// The English list shipped with the crate (`data/stopwords_en.txt`).
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_STOPWORDS, "builtin:stopwords_en.txt")
    }

    /// One lowercase word per line; blank lines are ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text, &path.display().to_string()))
    }

    /// Uses `$COVSUM_STOPWORDS` when set, the built-in list otherwise.
    pub fn from_env() -> Result<Self> {
        match std::env::var_os(STOPWORDS_ENV) {
            Some(p) if !p.is_empty() => Self::from_file(p),
            _ => Ok(Self::builtin()),
        }
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let text: String = words
            .into_iter()
            .map(|w| format!("{}\n", w.as_ref()))
            .collect();
        Self::parse(&text, "inline")
    }

    fn parse(text: &str, source: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Stopwords {
            words,
            sha256,
            source: source.to_string(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    /// SHA-256 of the list's text, recorded in run manifests.
    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Lowercases, splits on whitespace, and strips leading and trailing
/// punctuation from each token. Empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bigram {
    pub first: String,
    pub second: String,
}

impl Bigram {
    pub fn new(first: impl Into<String>, second: impl Into<String>) -> Self {
        Bigram {
            first: first.into(),
            second: second.into(),
        }
    }
}

impl fmt::Display for Bigram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.first, self.second)
    }
}

impl fmt::Debug for Bigram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}

/// Adjacent token pairs, skipping pairs made of two stopwords. Returned as a
/// multiset in text order.
pub fn extract_bigrams(tokens: &[String], stopwords: &Stopwords) -> Vec<Bigram> {
    tokens
        .windows(2)
        .filter(|w| !(stopwords.contains(&w[0]) && stopwords.contains(&w[1])))
        .map(|w| Bigram::new(w[0].clone(), w[1].clone()))
        .collect()
}

/// Occurrence counts of each bigram in `tokens`.
pub fn bigram_counts(tokens: &[String], stopwords: &Stopwords) -> BTreeMap<Bigram, usize> {
    let mut counts = BTreeMap::new();
    for b in extract_bigrams(tokens, stopwords) {
        *counts.entry(b).or_insert(0) += 1;
    }
    counts
}

/// Bigram concepts, sorted lexicographically, with term-frequency weights.
#[derive(Clone, Debug)]
pub struct ConceptTable {
    concepts: Vec<Bigram>,
    index: HashMap<Bigram, usize>,
    corpus_freq: Vec<usize>,
    weights: Vec<f64>,
    min_freq: usize,
    stopwords: Arc<Stopwords>,
}

impl ConceptTable {
    pub fn concepts(&self) -> &[Bigram] {
        &self.concepts
    }

    /// Concept weights `w_i`: token-occurrence frequency over the scope.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn corpus_freq(&self) -> &[usize] {
        &self.corpus_freq
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn stopwords(&self) -> &Arc<Stopwords> {
        &self.stopwords
    }

    pub fn index_of(&self, bigram: &Bigram) -> Option<usize> {
        self.index.get(bigram).copied()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    /// Distinct concepts of the table present in a sentence, ascending.
    pub fn concepts_in(&self, sentence: &SentenceRecord) -> Vec<usize> {
        let mut ids: Vec<usize> = extract_bigrams(&sentence.tokens, &self.stopwords)
            .iter()
            .filter_map(|b| self.index_of(b))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Counts bigrams over the sentences of the tasks in `scope` and keeps those
/// with frequency at least `min_freq`. `min_freq = 1` keeps every bigram.
pub fn build_concept_table<S: AsRef<str>>(
    corpus: &Corpus,
    scope: &[S],
    min_freq: usize,
    stopwords: Arc<Stopwords>,
) -> Result<ConceptTable> {
    if scope.is_empty() {
        return Err(Error::Invalid("concept table scope is empty".into()));
    }
    if min_freq == 0 {
        return Err(Error::Invalid("min_freq must be at least 1".into()));
    }
    let mut counts: BTreeMap<Bigram, usize> = BTreeMap::new();
    for task_id in scope {
        let task = corpus
            .task(task_id.as_ref())
            .ok_or_else(|| Error::UnknownTask(task_id.as_ref().to_string()))?;
        for s in &task.sentences {
            for b in extract_bigrams(&s.tokens, &stopwords) {
                *counts.entry(b).or_insert(0) += 1;
            }
        }
    }
    counts.retain(|_, &mut f| f >= min_freq);

    let concepts: Vec<Bigram> = counts.keys().cloned().collect();
    let corpus_freq: Vec<usize> = counts.values().copied().collect();
    let weights = corpus_freq.iter().map(|&f| f as f64).collect();
    let index = concepts
        .iter()
        .enumerate()
        .map(|(i, b)| (b.clone(), i))
        .collect();
    Ok(ConceptTable {
        concepts,
        index,
        corpus_freq,
        weights,
        min_freq,
        stopwords,
    })
}

/// Binary concept-by-sentence matrix `A`, stored by column.
///
/// Rows are concepts of the table, columns are sentences. The observed set
/// omega is the support of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoocMatrix {
    n_concepts: usize,
    columns: Vec<Vec<usize>>,
    sentence_ids: Vec<i64>,
    column_of: HashMap<i64, usize>,
}

impl CoocMatrix {
    /// Builds a matrix directly from column supports.
    pub fn from_columns(n_concepts: usize, columns: Vec<Vec<usize>>, sentence_ids: Vec<i64>) -> Result<Self> {
        if columns.len() != sentence_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} sentence ids", columns.len()),
                found: format!("{}", sentence_ids.len()),
            });
        }
        let mut columns = columns;
        for (j, col) in columns.iter_mut().enumerate() {
            col.sort_unstable();
            col.dedup();
            if let Some(&i) = col.last() {
                if i >= n_concepts {
                    return Err(Error::OutOfBounds {
                        row: i,
                        col: j,
                        rows: n_concepts,
                        cols: sentence_ids.len(),
                    });
                }
            }
        }
        let column_of = sentence_ids
            .iter()
            .enumerate()
            .map(|(j, &id)| (id, j))
            .collect();
        Ok(CoocMatrix {
            n_concepts,
            columns,
            sentence_ids,
            column_of,
        })
    }

    /// Builds from a dense 0/1 matrix; any non-zero entry counts as 1.
    pub fn from_dense(m: &Matrix) -> Self {
        let columns = (0..m.ncols())
            .map(|j| (0..m.nrows()).filter(|&i| m.get(i, j) != 0.0).collect())
            .collect();
        let ids = (0..m.ncols() as i64).collect();
        CoocMatrix::from_columns(m.nrows(), columns, ids).expect("dense shape is consistent")
    }

    pub fn n_concepts(&self) -> usize {
        self.n_concepts
    }

    pub fn n_sentences(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.columns[j].binary_search(&i).is_ok()
    }

    /// Sorted concept indices present in column `j`.
    pub fn column(&self, j: usize) -> &[usize] {
        &self.columns[j]
    }

    pub fn sentence_ids(&self) -> &[i64] {
        &self.sentence_ids
    }

    pub fn column_of(&self, sentence_id: i64) -> Option<usize> {
        self.column_of.get(&sentence_id).copied()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Observed positions `(i, j)`, sorted by row then column.
    pub fn omega(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .columns
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |&i| (i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn density(&self) -> f64 {
        let cells = self.n_concepts * self.n_sentences();
        if cells == 0 {
            0.0
        } else {
            self.nnz() as f64 / cells as f64
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n_concepts, self.n_sentences());
        for (j, col) in self.columns.iter().enumerate() {
            for &i in col {
                m.set(i, j, 1.0);
            }
        }
        m
    }

    /// Debug export: header `N M NNZ` then one `i j 1` line per nonzero.
    pub fn write_triplets(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.n_concepts, self.n_sentences(), self.nnz())?;
        for (i, j) in self.omega() {
            writeln!(out, "{i} {j} 1")?;
        }
        Ok(())
    }
}

pub fn build_matrix<'a>(
    table: &ConceptTable,
    sentences: impl IntoIterator<Item = &'a SentenceRecord>,
) -> CoocMatrix {
    let mut columns = Vec::new();
    let mut ids = Vec::new();
    for s in sentences {
        columns.push(table.concepts_in(s));
        ids.push(s.sentence_id);
    }
    CoocMatrix::from_columns(table.len(), columns, ids).expect("columns index the table")
}
