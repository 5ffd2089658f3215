//! Gold bigram pairs from phrase highlights, and the H1.a / H1.b tests on a
//! completed matrix.
//!
//! A highlighted phrase contributes a candidate bigram only when exactly one
//! bigram can be extracted from it. Within a task, candidates linked by shared
//! colors (directly or through other candidates) are similar; all other pairs
//! are different.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::stats::{paired_ttest, TTestResult};
use crate::completion::CompletedMatrix;
use crate::concepts::{extract_bigrams, tokenize, Bigram, ConceptTable, Stopwords};
use crate::corpus::{Corpus, HighlightAnnotation};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BigramPair {
    pub task_id: String,
    pub a: Bigram,
    pub b: Bigram,
}

/// `<i, j+, j->`: bigram `i`, a sentence holding a bigram similar to `i`, and
/// a sentence holding a bigram different from `i` and nothing similar to it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct H1aTriple {
    pub task_id: String,
    pub bigram: Bigram,
    pub pos_sentence: i64,
    pub neg_sentence: i64,
}

/// `<i+, i-, j>`: sentence `j` holds a bigram similar to `i+` and nothing
/// similar to `i-`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct H1bTriple {
    pub task_id: String,
    pub pos_bigram: Bigram,
    pub neg_bigram: Bigram,
    pub sentence: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GoldPairs {
    /// Candidate bigrams per task with the colors they were highlighted in.
    pub bigrams: BTreeMap<String, BTreeMap<Bigram, BTreeSet<String>>>,
    pub similar: BTreeSet<BigramPair>,
    pub different: BTreeSet<BigramPair>,
    pub triples_h1a: Vec<H1aTriple>,
    pub triples_h1b: Vec<H1bTriple>,
}

impl GoldPairs {
    pub fn n_bigrams(&self) -> usize {
        self.bigrams.values().map(BTreeMap::len).sum()
    }
}

/// The single bigram a phrase yields, if it yields exactly one.
pub fn phrase_bigram(text: &str, stopwords: &Stopwords) -> Option<Bigram> {
    let mut found: Vec<Bigram> = extract_bigrams(&tokenize(text), stopwords);
    found.sort();
    found.dedup();
    if found.len() == 1 {
        found.pop()
    } else {
        None
    }
}

/// Component label per bigram (in key order), joining bigrams that share a
/// color directly or through a chain of other bigrams.
fn similarity_groups(colors: &BTreeMap<Bigram, BTreeSet<String>>) -> Vec<usize> {
    let n = colors.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut first_with: HashMap<&str, usize> = HashMap::new();
    for (k, set) in colors.values().enumerate() {
        for c in set {
            match first_with.get(c.as_str()) {
                Some(&other) => {
                    let (ra, rb) = (find(&mut parent, k), find(&mut parent, other));
                    parent[ra.max(rb)] = ra.min(rb);
                }
                None => {
                    first_with.insert(c, k);
                }
            }
        }
    }
    (0..n).map(|k| find(&mut parent, k)).collect()
}

pub fn build_gold_pairs(
    annotations: &[HighlightAnnotation],
    corpus: &Corpus,
    stopwords: &Stopwords,
) -> GoldPairs {
    let mut gold = GoldPairs::default();

    for ann in annotations {
        let entry = gold.bigrams.entry(ann.task_id.clone()).or_default();
        for p in &ann.phrases {
            if let Some(b) = phrase_bigram(&p.text, stopwords) {
                entry.entry(b).or_default().insert(p.color_label.clone());
            }
        }
    }

    for (task_id, colors) in &gold.bigrams {
        let Some(task) = corpus.task(task_id) else { continue };
        let candidates: Vec<&Bigram> = colors.keys().collect();

        let group = similarity_groups(colors);
        let mut similar_to: HashMap<&Bigram, BTreeSet<&Bigram>> = HashMap::new();
        let mut different_to: HashMap<&Bigram, BTreeSet<&Bigram>> = HashMap::new();
        for (x, a) in candidates.iter().enumerate() {
            for (y, b) in candidates.iter().enumerate().skip(x + 1) {
                let shared = group[x] == group[y];
                let pair = BigramPair {
                    task_id: task_id.clone(),
                    a: (*a).clone(),
                    b: (*b).clone(),
                };
                if shared {
                    gold.similar.insert(pair);
                    similar_to.entry(a).or_default().insert(b);
                    similar_to.entry(b).or_default().insert(a);
                } else {
                    gold.different.insert(pair);
                    different_to.entry(a).or_default().insert(b);
                    different_to.entry(b).or_default().insert(a);
                }
            }
        }

        let sentence_bigrams: Vec<(i64, BTreeSet<Bigram>)> = task
            .sentences
            .iter()
            .map(|s| (s.sentence_id, extract_bigrams(&s.tokens, stopwords).into_iter().collect()))
            .collect();
        let hosts = |b: &Bigram| -> Vec<i64> {
            sentence_bigrams
                .iter()
                .filter(|(_, set)| set.contains(b))
                .map(|(id, _)| *id)
                .collect()
        };
        let holds_similar = |sentence: &BTreeSet<Bigram>, b: &Bigram| -> bool {
            sentence.contains(b)
                || similar_to
                    .get(b)
                    .is_some_and(|sim| sim.iter().any(|s| sentence.contains(*s)))
        };
        let bigrams_of: HashMap<i64, &BTreeSet<Bigram>> =
            sentence_bigrams.iter().map(|(id, set)| (*id, set)).collect();

        let mut h1a = BTreeSet::new();
        let mut h1b = BTreeSet::new();
        let empty = BTreeSet::new();
        for i in &candidates {
            let sims = similar_to.get(i).unwrap_or(&empty);
            let diffs = different_to.get(i).unwrap_or(&empty);
            if sims.is_empty() || diffs.is_empty() {
                continue;
            }
            let pos_hosts: BTreeSet<i64> = sims.iter().flat_map(|b| hosts(b)).collect();
            let neg_hosts: BTreeSet<i64> = diffs
                .iter()
                .flat_map(|b| hosts(b))
                .filter(|j| !holds_similar(bigrams_of[j], i))
                .collect();
            for &jp in &pos_hosts {
                for &jn in &neg_hosts {
                    h1a.insert(H1aTriple {
                        task_id: task_id.clone(),
                        bigram: (*i).clone(),
                        pos_sentence: jp,
                        neg_sentence: jn,
                    });
                }
            }
            let own_hosts = hosts(i);
            for neg in diffs {
                for &j in &own_hosts {
                    if holds_similar(bigrams_of[&j], neg) {
                        continue;
                    }
                    for pos in sims {
                        h1b.insert(H1bTriple {
                            task_id: task_id.clone(),
                            pos_bigram: (*pos).clone(),
                            neg_bigram: (*neg).clone(),
                            sentence: j,
                        });
                    }
                }
            }
        }
        gold.triples_h1a.extend(h1a);
        gold.triples_h1b.extend(h1b);
    }
    gold
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub n: usize,
    pub mean_pos: f64,
    pub mean_neg: f64,
    /// `None` when fewer than two triples could be evaluated.
    pub ttest: Option<TTestResult>,
    /// Triples whose bigram or sentence is missing from the matrix.
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub h1a: HypothesisResult,
    pub h1b: HypothesisResult,
}

/// Paired comparison of completed scores; `pairs` are `(positive, negative)`.
pub fn compare_scores(pairs: &[(f64, f64)], skipped: usize) -> Result<HypothesisResult> {
    if pairs.is_empty() {
        return Err(Error::Invalid("no triples to evaluate".into()));
    }
    let pos: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let neg: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let n = pairs.len();
    let ttest = if n >= 2 { Some(paired_ttest(&pos, &neg)?) } else { None };
    Ok(HypothesisResult {
        n,
        mean_pos: pos.iter().sum::<f64>() / n as f64,
        mean_neg: neg.iter().sum::<f64>() / n as f64,
        ttest,
        skipped,
    })
}

pub fn test_h1(completed: &CompletedMatrix, table: &ConceptTable, pairs: &GoldPairs) -> Result<H1Report> {
    let cell = |b: &Bigram, sentence: i64| -> Option<f64> {
        Some(completed.get(table.index_of(b)?, completed.column_of(sentence)?))
    };

    let mut skipped_a = 0;
    let mut values_a = Vec::new();
    for t in &pairs.triples_h1a {
        match (cell(&t.bigram, t.pos_sentence), cell(&t.bigram, t.neg_sentence)) {
            (Some(p), Some(n)) => values_a.push((p, n)),
            _ => skipped_a += 1,
        }
    }
    let mut skipped_b = 0;
    let mut values_b = Vec::new();
    for t in &pairs.triples_h1b {
        match (cell(&t.pos_bigram, t.sentence), cell(&t.neg_bigram, t.sentence)) {
            (Some(p), Some(n)) => values_b.push((p, n)),
            _ => skipped_b += 1,
        }
    }
    Ok(H1Report {
        h1a: compare_scores(&values_a, skipped_a)?,
        h1b: compare_scores(&values_b, skipped_b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{HighlightPhrase, Location};

    fn phrase(text: &str, color: &str) -> HighlightPhrase {
        HighlightPhrase {
            text: text.into(),
            color_label: color.into(),
            location: Location::Summary,
            sentence_id: None,
        }
    }

    #[test]
    fn phrase_with_two_bigrams_is_discarded() {
        let sw = Stopwords::builtin();
        assert_eq!(phrase_bigram("error bounding", &sw), Some(Bigram::new("error", "bounding")));
        assert_eq!(phrase_bigram("the bicycle parts", &sw), None);
        assert_eq!(phrase_bigram("hypothesis", &sw), None);
    }

    #[test]
    fn same_color_phrases_make_one_similar_pair() {
        let sw = Stopwords::builtin();
        let corpus = crate::corpus::read_corpus(
            concat!(
                r#"{"kind":"task_meta","task_id":"t","length_budget":5}"#,
                "\n",
                r#"{"kind":"sentence","sentence_id":1,"task_id":"t","doc_id":"d","text":"bias reduction"}"#,
                "\n"
            )
            .as_bytes(),
            std::path::Path::new("m"),
            "m",
        )
        .unwrap();
        let ann = vec![HighlightAnnotation {
            task_id: "t".into(),
            phrases: vec![phrase("bias reduction", "red"), phrase("bias correction", "red")],
        }];
        let gold = build_gold_pairs(&ann, &corpus, &sw);
        assert_eq!(gold.similar.len(), 1);
        assert!(gold.different.is_empty());
        assert_eq!(gold.n_bigrams(), 2);
    }

    #[test]
    fn similarity_is_transitive_across_colors() {
        let sw = Stopwords::builtin();
        let corpus = crate::corpus::read_corpus(
            concat!(
                r#"{"kind":"task_meta","task_id":"t","length_budget":5}"#,
                "\n",
                r#"{"kind":"sentence","sentence_id":1,"task_id":"t","doc_id":"d","text":"x y"}"#,
                "\n"
            )
            .as_bytes(),
            std::path::Path::new("m"),
            "m",
        )
        .unwrap();
        let ann = vec![HighlightAnnotation {
            task_id: "t".into(),
            phrases: vec![
                phrase("bias reduction", "red"),
                phrase("bias correction", "red"),
                phrase("bias correction", "blue"),
                phrase("error bounding", "blue"),
                phrase("sample size", "green"),
            ],
        }];
        let gold = build_gold_pairs(&ann, &corpus, &sw);
        assert_eq!(gold.similar.len(), 3);
        assert_eq!(gold.different.len(), 3);
    }

    #[test]
    fn empty_triples_error() {
        assert!(compare_scores(&[], 0).is_err());
    }
}
