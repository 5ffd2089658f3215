//! ROUGE-1/2, ROUGE-SU4 and ROUGE-L over [`tokenize`](crate::concepts::tokenize)d text.
//!
//! No stemming and no stopword removal. With several references, the score
//! against the reference giving the highest recall is reported (ties go to
//! the higher F1). ROUGE-L is the plain LCS over whole token sequences.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::concepts::tokenize;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::summarize::Summary;

/// Largest number of tokens allowed between the two words of a skip-bigram.
pub const SKIP_GAP: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Scores {
    pub fn new(recall: f64, precision: f64) -> Self {
        let f1 = if recall + precision > 0.0 {
            2.0 * recall * precision / (recall + precision)
        } else {
            0.0
        };
        Scores {
            recall,
            precision,
            f1,
        }
    }

    fn from_counts(matches: usize, reference_total: usize, candidate_total: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        Scores::new(ratio(matches, reference_total), ratio(matches, candidate_total))
    }

    fn better_than(&self, other: &Scores) -> bool {
        self.recall > other.recall || (self.recall == other.recall && self.f1 > other.f1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "ROUGE-1")]
    Rouge1,
    #[serde(rename = "ROUGE-2")]
    Rouge2,
    #[serde(rename = "ROUGE-SU4")]
    RougeSu4,
    #[serde(rename = "ROUGE-L")]
    RougeL,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Rouge1, Metric::Rouge2, Metric::RougeSu4, Metric::RougeL];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rouge1 => "ROUGE-1",
            Metric::Rouge2 => "ROUGE-2",
            Metric::RougeSu4 => "ROUGE-SU4",
            Metric::RougeL => "ROUGE-L",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type Units<'a> = HashMap<Vec<&'a str>, usize>;

fn ngrams(tokens: &[String], n: usize) -> Units<'_> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            let key: Vec<&str> = w.iter().map(String::as_str).collect();
            *out.entry(key).or_insert(0) += 1;
        }
    }
    out
}

fn skip_bigrams_with_unigrams(tokens: &[String]) -> Units<'_> {
    let mut out = ngrams(tokens, 1);
    for i in 0..tokens.len() {
        let end = (i + SKIP_GAP + 2).min(tokens.len());
        for j in (i + 1)..end {
            *out.entry(vec![tokens[i].as_str(), tokens[j].as_str()]).or_insert(0) += 1;
        }
    }
    out
}

fn clipped_overlap(candidate: &Units<'_>, reference: &Units<'_>) -> usize {
    reference
        .iter()
        .map(|(k, &r)| candidate.get(k).map_or(0, |&c| c.min(r)))
        .sum()
}

fn best_over_references<F>(references: &[Vec<String>], score: F) -> Result<Scores>
where
    F: Fn(&[String]) -> Scores,
{
    if references.is_empty() {
        return Err(Error::Invalid("ROUGE needs at least one reference".into()));
    }
    let mut best: Option<Scores> = None;
    for r in references {
        let s = score(r);
        if best.is_none_or(|b| s.better_than(&b)) {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one reference"))
}

fn unit_scores(candidate: &Units<'_>, reference: &Units<'_>) -> Scores {
    let matches = clipped_overlap(candidate, reference);
    Scores::from_counts(
        matches,
        reference.values().sum(),
        candidate.values().sum(),
    )
}

pub fn rouge_n(candidate: &[String], references: &[Vec<String>], n: usize) -> Result<Scores> {
    if n == 0 {
        return Err(Error::Invalid("ROUGE-N needs n >= 1".into()));
    }
    let cand = ngrams(candidate, n);
    best_over_references(references, |r| unit_scores(&cand, &ngrams(r, n)))
}

/// Skip-bigrams with at most four intervening tokens, plus unigrams.
pub fn rouge_su4(candidate: &[String], references: &[Vec<String>]) -> Result<Scores> {
    let cand = skip_bigrams_with_unigrams(candidate);
    best_over_references(references, |r| unit_scores(&cand, &skip_bigrams_with_unigrams(r)))
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(candidate: &[String], references: &[Vec<String>]) -> Result<Scores> {
    best_over_references(references, |r| {
        Scores::from_counts(lcs_len(candidate, r), r.len(), candidate.len())
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub r1: Scores,
    pub r2: Scores,
    pub rsu4: Scores,
    pub rl: Scores,
}

impl MetricScores {
    pub fn get(&self, metric: Metric) -> Scores {
        match metric {
            Metric::Rouge1 => self.r1,
            Metric::Rouge2 => self.r2,
            Metric::RougeSu4 => self.rsu4,
            Metric::RougeL => self.rl,
        }
    }

    fn get_mut(&mut self, metric: Metric) -> &mut Scores {
        match metric {
            Metric::Rouge1 => &mut self.r1,
            Metric::Rouge2 => &mut self.r2,
            Metric::RougeSu4 => &mut self.rsu4,
            Metric::RougeL => &mut self.rl,
        }
    }
}

pub fn score_tokens(candidate: &[String], references: &[Vec<String>]) -> Result<MetricScores> {
    Ok(MetricScores {
        r1: rouge_n(candidate, references, 1)?,
        r2: rouge_n(candidate, references, 2)?,
        rsu4: rouge_su4(candidate, references)?,
        rl: rouge_l(candidate, references)?,
    })
}

pub fn score_text(candidate: &str, references: &[&str]) -> Result<MetricScores> {
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize(r)).collect();
    score_tokens(&tokenize(candidate), &refs)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub system: String,
    /// Scores per task, in corpus task order.
    pub per_task: Vec<(String, MetricScores)>,
    /// Arithmetic mean of each recall, precision and F1 over tasks.
    pub corpus_mean: MetricScores,
}

/// Scores each summary against its task's references. Summaries whose task has
/// no references are an error.
pub fn score_summaries(corpus: &Corpus, summaries: &[Summary]) -> Result<RougeReport> {
    let mut per_task = Vec::new();
    let mut system = String::new();
    for task in &corpus.tasks {
        let Some(summary) = summaries.iter().find(|s| s.task_id == task.task_id) else {
            continue;
        };
        if system.is_empty() {
            system = summary.system.to_string();
        }
        if task.human_summaries.is_empty() {
            return Err(Error::Invalid(format!(
                "task `{}` has no reference summaries",
                task.task_id
            )));
        }
        let scores = score_tokens(&tokenize(&summary.text), &task.reference_tokens())?;
        per_task.push((task.task_id.clone(), scores));
    }
    Ok(RougeReport {
        system,
        corpus_mean: mean_scores(per_task.iter().map(|(_, s)| s)),
        per_task,
    })
}

pub fn mean_scores<'a>(scores: impl IntoIterator<Item = &'a MetricScores>) -> MetricScores {
    let mut total = MetricScores::default();
    let mut n = 0usize;
    for s in scores {
        n += 1;
        for m in Metric::ALL {
            let src = s.get(m);
            let dst = total.get_mut(m);
            dst.recall += src.recall;
            dst.precision += src.precision;
            dst.f1 += src.f1;
        }
    }
    if n > 0 {
        for m in Metric::ALL {
            let dst = total.get_mut(m);
            dst.recall /= n as f64;
            dst.precision /= n as f64;
            dst.f1 /= n as f64;
        }
    }
    total
}

pub const REPORT_HEADER: &str = "corpus,system,task_id,metric,recall,precision,f1";

/// Rows of `corpus,system,task_id,metric,recall,precision,f1`; the corpus mean
/// uses task id `_mean`. Writes the header only when `header` is set.
pub fn write_report_csv(
    report: &RougeReport,
    corpus_id: &str,
    header: bool,
    mut out: impl Write,
) -> std::io::Result<()> {
    if header {
        writeln!(out, "{REPORT_HEADER}")?;
    }
    let rows = report
        .per_task
        .iter()
        .map(|(t, s)| (t.as_str(), s))
        .chain(std::iter::once(("_mean", &report.corpus_mean)));
    for (task_id, scores) in rows {
        for m in Metric::ALL {
            let s = scores.get(m);
            writeln!(
                out,
                "{corpus_id},{},{task_id},{m},{:.6},{:.6},{:.6}",
                report.system, s.recall, s.precision, s.f1
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn identity_scores_one() {
        let text = t("the cat sat on the mat");
        let s = score_tokens(&text, std::slice::from_ref(&text)).unwrap();
        for m in Metric::ALL {
            assert_eq!(s.get(m), Scores::new(1.0, 1.0), "{m}");
        }
    }

    #[test]
    fn rouge_n_hand_counts() {
        let cand = t("the cat sat");
        let refs = [t("the cat")];
        let r1 = rouge_n(&cand, &refs, 1).unwrap();
        assert_eq!(r1.recall, 1.0);
        assert!((r1.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rouge_n(&cand, &refs, 2).unwrap().recall, 1.0);
        assert_eq!(rouge_n(&t("a b"), &[t("c d")], 1).unwrap(), Scores::default());
        assert!(rouge_n(&cand, &[], 1).is_err());
    }

    #[test]
    fn clipping() {
        let r = rouge_n(&t("the the the"), &[t("the cat")], 1).unwrap();
        assert_eq!(r.recall, 0.5);
        assert!((r.precision - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn su4_hand_enumeration() {
        assert_eq!(rouge_su4(&t("a b c"), &[t("a c")]).unwrap().recall, 1.0);
        assert_eq!(rouge_su4(&t("a"), &[t("a")]).unwrap().recall, 1.0);
        // gap of five tokens is too wide
        let s = rouge_su4(&t("a x x x x x b"), &[t("a b")]).unwrap();
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-15);
        let s = rouge_su4(&t("a x x x x b"), &[t("a b")]).unwrap();
        assert_eq!(s.recall, 1.0);
    }

    #[test]
    fn lcs_hand() {
        let s = rouge_l(&t("a x b y c"), &[t("a b c")]).unwrap();
        assert_eq!(s.recall, 1.0);
        assert!((s.precision - 0.6).abs() < 1e-15);
        assert_eq!(rouge_l(&t("a b"), &[t("c d")]).unwrap().recall, 0.0);
        assert_eq!(lcs_len(&t(""), &t("a")), 0);
    }

    #[test]
    fn best_reference_wins() {
        let s = rouge_n(&t("a b"), &[t("c d"), t("a b")], 1).unwrap();
        assert_eq!(s.recall, 1.0);
    }

    #[test]
    fn empty_candidate() {
        let s = rouge_l(&[], &[t("a b")]).unwrap();
        assert_eq!(s, Scores::default());
    }
}
