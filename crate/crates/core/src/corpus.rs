//! Corpus data model and JSON-lines I/O.
//!
//! A corpus file holds one JSON object per line, discriminated by `kind`:
//!
//! ```text
//! {"kind":"corpus_meta","corpus_id":"eng","genre":"response","matrix_scope":"corpus"}
//! {"kind":"task_meta","task_id":"t1","prompt":null,"length_budget":null}
//! {"kind":"sentence","sentence_id":0,"task_id":"t1","doc_id":"d0","author_id":null,"text":"..."}
//! {"kind":"summary","task_id":"t1","summary_index":0,"text":"..."}
//! ```
//!
//! `corpus_meta` is optional. Several `summary` lines sharing a `summary_index`
//! are the sentences of one reference summary, in file order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::concepts::tokenize;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Genre {
    #[default]
    Response,
    Review,
    News,
}

impl std::fmt::Display for Genre {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Genre::Response => "response",
            Genre::Review => "review",
            Genre::News => "news",
        })
    }
}

/// Whether one co-occurrence matrix spans the whole corpus or each task gets its own.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixScope {
    #[default]
    Corpus,
    PerTask,
}

impl std::str::FromStr for MatrixScope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "corpus" => Ok(MatrixScope::Corpus),
            "per_task" | "per-task" => Ok(MatrixScope::PerTask),
            other => Err(format!("unknown matrix scope `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub sentence_id: i64,
    pub task_id: String,
    pub doc_id: String,
    pub author_id: Option<String>,
    pub raw_text: String,
    /// Lowercased tokens produced by [`tokenize`].
    pub tokens: Vec<String>,
    /// Whitespace token count of `raw_text`; the sentence length in budget units.
    pub word_count: usize,
}

impl SentenceRecord {
    pub fn new(
        sentence_id: i64,
        task_id: impl Into<String>,
        doc_id: impl Into<String>,
        author_id: Option<String>,
        raw_text: impl Into<String>,
    ) -> Result<Self> {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text);
        let word_count = word_count(&raw_text);
        if word_count == 0 || tokens.is_empty() {
            return Err(Error::Invalid(format!(
                "sentence {sentence_id} has no word tokens"
            )));
        }
        Ok(SentenceRecord {
            sentence_id,
            task_id: task_id.into(),
            doc_id: doc_id.into(),
            author_id,
            raw_text,
            tokens,
            word_count,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub prompt: Option<String>,
    pub sentences: Vec<SentenceRecord>,
    /// Each reference summary is a list of sentences or phrases.
    pub human_summaries: Vec<Vec<String>>,
    /// Word budget L.
    pub length_budget: usize,
}

impl Task {
    pub fn summary_word_counts(&self) -> Vec<usize> {
        self.human_summaries
            .iter()
            .map(|s| s.iter().map(|p| word_count(p)).sum())
            .collect()
    }

    /// Token lists of each reference summary, sentences concatenated.
    pub fn reference_tokens(&self) -> Vec<Vec<String>> {
        self.human_summaries
            .iter()
            .map(|s| s.iter().flat_map(|p| tokenize(p)).collect())
            .collect()
    }

    pub fn total_words(&self) -> usize {
        self.sentences.iter().map(|s| s.word_count).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub corpus_id: String,
    pub genre: Genre,
    pub tasks: Vec<Task>,
    pub matrix_scope: MatrixScope,
}

impl Corpus {
    pub fn task(&self, task_id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn sentences(&self) -> impl Iterator<Item = &SentenceRecord> {
        self.tasks.iter().flat_map(|t| t.sentences.iter())
    }

    pub fn n_sentences(&self) -> usize {
        self.tasks.iter().map(|t| t.sentences.len()).sum()
    }
}

/// Whitespace token count.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// `floor(mean)` of the reference summary lengths, or `None` without references.
pub fn default_length_budget(summary_word_counts: &[usize]) -> Option<usize> {
    if summary_word_counts.is_empty() {
        return None;
    }
    let total: usize = summary_word_counts.iter().sum();
    Some(total / summary_word_counts.len())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Record {
    CorpusMeta {
        #[serde(default)]
        corpus_id: Option<String>,
        #[serde(default)]
        genre: Option<Genre>,
        #[serde(default)]
        matrix_scope: Option<MatrixScope>,
    },
    TaskMeta {
        task_id: String,
        #[serde(default)]
        prompt: Option<String>,
        #[serde(default)]
        length_budget: Option<usize>,
    },
    Sentence {
        sentence_id: i64,
        task_id: String,
        doc_id: String,
        #[serde(default)]
        author_id: Option<String>,
        text: String,
    },
    Summary {
        task_id: String,
        summary_index: usize,
        text: String,
    },
}

#[derive(Default)]
struct TaskBuilder {
    prompt: Option<String>,
    length_budget: Option<usize>,
    has_meta: bool,
    sentences: Vec<SentenceRecord>,
    summaries: BTreeMap<usize, Vec<String>>,
}

fn builder_for<'a>(
    builders: &'a mut HashMap<String, TaskBuilder>,
    order: &mut Vec<String>,
    task_id: &str,
) -> &'a mut TaskBuilder {
    if !builders.contains_key(task_id) {
        order.push(task_id.to_string());
    }
    builders.entry(task_id.to_string()).or_default()
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let default_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    read_corpus(BufReader::new(file), path, &default_id)
}

/// Parses a corpus from any line reader. `source` is only used in error messages.
pub fn read_corpus(reader: impl BufRead, source: &Path, default_id: &str) -> Result<Corpus> {
    let mut corpus_id = default_id.to_string();
    let mut genre = Genre::default();
    let mut matrix_scope = MatrixScope::default();
    let mut saw_meta = false;
    let mut order: Vec<String> = Vec::new();
    let mut builders: HashMap<String, TaskBuilder> = HashMap::new();
    let mut seen_sentences: HashSet<i64> = HashSet::new();
    let mut n_records = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        n_records += 1;

        match record {
            Record::CorpusMeta {
                corpus_id: id,
                genre: g,
                matrix_scope: scope,
            } => {
                if saw_meta {
                    return Err(Error::DuplicateId {
                        kind: "corpus_meta",
                        id: corpus_id,
                    });
                }
                saw_meta = true;
                if let Some(id) = id {
                    corpus_id = id;
                }
                genre = g.unwrap_or_default();
                matrix_scope = scope.unwrap_or_default();
            }
            Record::TaskMeta {
                task_id,
                prompt,
                length_budget,
            } => {
                let b = builder_for(&mut builders, &mut order, &task_id);
                if b.has_meta {
                    return Err(Error::DuplicateId {
                        kind: "task_meta",
                        id: task_id,
                    });
                }
                if length_budget == Some(0) {
                    return Err(Error::Parse {
                        path: source.to_path_buf(),
                        line: lineno,
                        message: "length_budget must be at least 1".into(),
                    });
                }
                b.has_meta = true;
                b.prompt = prompt;
                b.length_budget = length_budget;
            }
            Record::Sentence {
                sentence_id,
                task_id,
                doc_id,
                author_id,
                text,
            } => {
                if !seen_sentences.insert(sentence_id) {
                    return Err(Error::DuplicateId {
                        kind: "sentence",
                        id: sentence_id.to_string(),
                    });
                }
                let sentence = SentenceRecord::new(sentence_id, &task_id, doc_id, author_id, text)
                    .map_err(|e| Error::Parse {
                        path: source.to_path_buf(),
                        line: lineno,
                        message: e.to_string(),
                    })?;
                builder_for(&mut builders, &mut order, &task_id).sentences.push(sentence);
            }
            Record::Summary {
                task_id,
                summary_index,
                text,
            } => {
                builder_for(&mut builders, &mut order, &task_id)
                    .summaries
                    .entry(summary_index)
                    .or_default()
                    .push(text);
            }
        }
    }

    if n_records == 0 || order.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut tasks = Vec::with_capacity(order.len());
    for task_id in order {
        let b = builders.remove(&task_id).expect("builder registered with order");
        let human_summaries: Vec<Vec<String>> = b.summaries.into_values().collect();
        let mut task = Task {
            task_id,
            prompt: b.prompt,
            sentences: b.sentences,
            human_summaries,
            length_budget: 0,
        };
        task.length_budget = match b.length_budget {
            Some(l) => l,
            None => match default_length_budget(&task.summary_word_counts()) {
                Some(l) if l >= 1 => l,
                _ => {
                    return Err(Error::Invalid(format!(
                        "task `{}` has no length_budget and no non-empty human summaries",
                        task.task_id
                    )))
                }
            },
        };
        tasks.push(task);
    }

    Ok(Corpus {
        corpus_id,
        genre,
        tasks,
        matrix_scope,
    })
}

/// Writes a corpus in the same JSON-lines format `load_corpus` reads.
/// Length budgets are always written explicitly.
pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    let meta = Record::CorpusMeta {
        corpus_id: Some(corpus.corpus_id.clone()),
        genre: Some(corpus.genre),
        matrix_scope: Some(corpus.matrix_scope),
    };
    writeln!(out, "{}", serde_json::to_string(&meta)?)?;
    for task in &corpus.tasks {
        let meta = Record::TaskMeta {
            task_id: task.task_id.clone(),
            prompt: task.prompt.clone(),
            length_budget: Some(task.length_budget),
        };
        writeln!(out, "{}", serde_json::to_string(&meta)?)?;
        for s in &task.sentences {
            let rec = Record::Sentence {
                sentence_id: s.sentence_id,
                task_id: s.task_id.clone(),
                doc_id: s.doc_id.clone(),
                author_id: s.author_id.clone(),
                text: s.raw_text.clone(),
            };
            writeln!(out, "{}", serde_json::to_string(&rec)?)?;
        }
        for (idx, summary) in task.human_summaries.iter().enumerate() {
            for text in summary {
                let rec = Record::Summary {
                    task_id: task.task_id.clone(),
                    summary_index: idx,
                    text: text.clone(),
                };
                writeln!(out, "{}", serde_json::to_string(&rec)?)?;
            }
        }
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_corpus(corpus, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Response,
    Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighlightPhrase {
    pub text: String,
    /// Opaque label, compared by equality only.
    pub color_label: String,
    pub location: Location,
    pub sentence_id: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighlightAnnotation {
    pub task_id: String,
    pub phrases: Vec<HighlightPhrase>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnotationRecord {
    task_id: String,
    text: String,
    color: String,
    location: Location,
    #[serde(default)]
    sentence_id: Option<i64>,
}

pub fn load_annotations(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Vec<HighlightAnnotation>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_annotations(BufReader::new(file), path, corpus)
}

/// Parses highlight annotations and checks them against `corpus`.
///
/// Response-located phrases without a `sentence_id` are attached to the first
/// sentence of their task whose lowercased text contains the lowercased phrase.
pub fn read_annotations(
    reader: impl BufRead,
    source: &Path,
    corpus: &Corpus,
) -> Result<Vec<HighlightAnnotation>> {
    let mut order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<HighlightPhrase>> = HashMap::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AnnotationRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        let task = corpus
            .task(&rec.task_id)
            .ok_or_else(|| Error::UnknownTask(rec.task_id.clone()))?;

        let mut sentence_id = rec.sentence_id;
        if rec.location == Location::Response {
            match sentence_id {
                Some(id) => {
                    if !task.sentences.iter().any(|s| s.sentence_id == id) {
                        return Err(Error::DanglingSentence {
                            sentence_id: id,
                            context: format!("{}:{lineno}", source.display()),
                        });
                    }
                }
                None => {
                    let needle = rec.text.to_lowercase();
                    let found = task
                        .sentences
                        .iter()
                        .find(|s| s.raw_text.to_lowercase().contains(&needle));
                    match found {
                        Some(s) => sentence_id = Some(s.sentence_id),
                        None => {
                            return Err(Error::Invalid(format!(
                                "{}:{lineno}: response phrase `{}` matches no sentence of task `{}`",
                                source.display(),
                                rec.text,
                                rec.task_id
                            )))
                        }
                    }
                }
            }
        }

        if !grouped.contains_key(&rec.task_id) {
            order.push(rec.task_id.clone());
        }
        grouped.entry(rec.task_id).or_default().push(HighlightPhrase {
            text: rec.text,
            color_label: rec.color,
            location: rec.location,
            sentence_id,
        });
    }

    Ok(order
        .into_iter()
        .map(|task_id| {
            let phrases = grouped.remove(&task_id).unwrap_or_default();
            HighlightAnnotation { task_id, phrases }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus> {
        read_corpus(text.as_bytes(), Path::new("mem.jsonl"), "mem")
    }

    #[test]
    fn default_budget_is_floor_of_mean_summary_length() {
        let c = parse(concat!(
            r#"{"kind":"sentence","sentence_id":0,"task_id":"t","doc_id":"d","text":"the bicycle parts were fun"}"#,
            "\n",
            r#"{"kind":"sentence","sentence_id":1,"task_id":"t","doc_id":"d","text":"error bounding is useful."}"#,
            "\n",
            r#"{"kind":"summary","task_id":"t","summary_index":0,"text":"one two three four five six seven eight nine ten eleven twelve"}"#,
            "\n"
        ))
        .unwrap();
        assert_eq!(c.tasks.len(), 1);
        assert_eq!(c.tasks[0].sentences.len(), 2);
        assert_eq!(c.tasks[0].length_budget, 12);
        assert_eq!(c.corpus_id, "mem");
        assert_eq!(c.matrix_scope, MatrixScope::Corpus);
    }

    #[test]
    fn budget_floor_across_summaries() {
        assert_eq!(default_length_budget(&[3, 4]), Some(3));
        assert_eq!(default_length_budget(&[10, 11, 11]), Some(10));
        assert_eq!(default_length_budget(&[]), None);
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(parse(""), Err(Error::EmptyCorpus)));
        assert!(matches!(parse("\n\n"), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = parse(concat!(
            r#"{"kind":"task_meta","task_id":"t","length_budget":5}"#,
            "\n",
            "{not json\n"
        ))
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_reported() {
        let err = parse(r#"{"kind":"sentence","sentence_id":0,"task_id":"t","doc_id":"d"}"#).unwrap_err();
        assert!(err.to_string().contains("missing field `text`"), "{err}");
    }

    #[test]
    fn duplicate_sentence_id_is_rejected() {
        let err = parse(concat!(
            r#"{"kind":"task_meta","task_id":"t","length_budget":5}"#,
            "\n",
            r#"{"kind":"sentence","sentence_id":3,"task_id":"t","doc_id":"d","text":"a b"}"#,
            "\n",
            r#"{"kind":"sentence","sentence_id":3,"task_id":"t","doc_id":"d","text":"c d"}"#,
            "\n"
        ))
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { kind: "sentence", .. }));
    }

    #[test]
    fn task_without_budget_or_summary_is_rejected() {
        let err = parse(r#"{"kind":"sentence","sentence_id":3,"task_id":"t","doc_id":"d","text":"a b"}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn punctuation_only_sentence_is_rejected() {
        let err = parse(concat!(
            r#"{"kind":"task_meta","task_id":"t","length_budget":5}"#,
            "\n",
            r#"{"kind":"sentence","sentence_id":3,"task_id":"t","doc_id":"d","text":" -- "}"#,
            "\n"
        ))
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    fn stat_corpus() -> Corpus {
        parse(concat!(
            r#"{"kind":"task_meta","task_id":"lec1","length_budget":10}"#,
            "\n",
            r#"{"kind":"sentence","sentence_id":4,"task_id":"lec1","doc_id":"s1","text":"The error boundary was confusing"}"#,
            "\n",
            r#"{"kind":"sentence","sentence_id":5,"task_id":"lec1","doc_id":"s2","text":"bias correction"}"#,
            "\n"
        ))
        .unwrap()
    }

    #[test]
    fn annotations_share_color() {
        let corpus = stat_corpus();
        let text = concat!(
            r#"{"task_id":"lec1","text":"error bounding","color":"green","location":"summary","sentence_id":null}"#,
            "\n",
            r#"{"task_id":"lec1","text":"error boundary","color":"green","location":"response","sentence_id":4}"#,
            "\n"
        );
        let ann = read_annotations(text.as_bytes(), Path::new("a.jsonl"), &corpus).unwrap();
        assert_eq!(ann.len(), 1);
        assert_eq!(ann[0].phrases.len(), 2);
        assert_eq!(ann[0].phrases[0].color_label, ann[0].phrases[1].color_label);
    }

    #[test]
    fn response_phrase_without_id_is_located_by_substring() {
        let corpus = stat_corpus();
        let text = r#"{"task_id":"lec1","text":"Bias Correction","color":"red","location":"response"}"#;
        let ann = read_annotations(text.as_bytes(), Path::new("a.jsonl"), &corpus).unwrap();
        assert_eq!(ann[0].phrases[0].sentence_id, Some(5));
    }

    #[test]
    fn empty_annotation_file() {
        let corpus = stat_corpus();
        let ann = read_annotations("".as_bytes(), Path::new("a.jsonl"), &corpus).unwrap();
        assert!(ann.is_empty());
    }

    #[test]
    fn dangling_annotation_is_rejected() {
        let corpus = stat_corpus();
        let text = r#"{"task_id":"lec1","text":"x y","color":"red","location":"response","sentence_id":99}"#;
        let err = read_annotations(text.as_bytes(), Path::new("a.jsonl"), &corpus).unwrap_err();
        assert!(matches!(err, Error::DanglingSentence { sentence_id: 99, .. }));

        let text = r#"{"task_id":"nope","text":"x y","color":"red","location":"summary"}"#;
        let err = read_annotations(text.as_bytes(), Path::new("a.jsonl"), &corpus).unwrap_err();
        assert!(matches!(err, Error::UnknownTask(_)));
    }
}
