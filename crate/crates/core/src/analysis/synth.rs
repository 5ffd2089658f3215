//! Corpus variants with a shifted `alpha_{b=1}`, made by deleting input
//! sentences.
//!
//! `Increase` removes hosts of summary bigrams that occur more than once until
//! each occurs once, never removing a sentence whose loss would make some
//! summary bigram disappear from the input. `Decrease` removes sentences whose
//! summary bigrams all occur exactly once. Either way a task keeps at least
//! one sentence.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attributes::{alpha_b1, summary_bigrams, task_bigram_freq};
use crate::concepts::{bigram_counts, Bigram, Stopwords};
use crate::corpus::{Corpus, Task};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increase,
    Decrease,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "increase" => Ok(Direction::Increase),
            "decrease" => Ok(Direction::Decrease),
            other => Err(format!("unknown direction `{other}` (expected increase or decrease)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub direction: Direction,
    pub seed: u64,
    /// Share of eligible targets (bigrams for `Increase`, sentences for
    /// `Decrease`) acted on, in `[0, 1]`.
    pub fraction: f64,
}

impl SynthesisConfig {
    pub fn new(direction: Direction, seed: u64) -> Self {
        SynthesisConfig {
            direction,
            seed,
            fraction: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub task_id: String,
    pub sentence_id: i64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub corpus: Corpus,
    pub removals: Vec<Removal>,
    pub alpha_before: Option<f64>,
    pub alpha_after: Option<f64>,
}

pub fn synthesize_alpha(
    corpus: &Corpus,
    direction: Direction,
    seed: u64,
    stopwords: &Stopwords,
) -> Result<SynthesisResult> {
    synthesize_alpha_with(corpus, &SynthesisConfig::new(direction, seed), stopwords)
}

pub fn synthesize_alpha_with(
    corpus: &Corpus,
    cfg: &SynthesisConfig,
    stopwords: &Stopwords,
) -> Result<SynthesisResult> {
    if !(0.0..=1.0).contains(&cfg.fraction) {
        return Err(Error::Invalid(format!("fraction {} outside [0, 1]", cfg.fraction)));
    }
    let mut out = corpus.clone();
    let mut removals = Vec::new();
    for (k, task) in out.tasks.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64);
        let removed = match cfg.direction {
            Direction::Increase => increase(task, stopwords, cfg.fraction, &mut rng),
            Direction::Decrease => decrease(task, stopwords, cfg.fraction, &mut rng),
        };
        let gone: BTreeSet<i64> = removed.iter().map(|(id, _)| *id).collect();
        task.sentences.retain(|s| !gone.contains(&s.sentence_id));
        removals.extend(removed.into_iter().map(|(sentence_id, reason)| Removal {
            task_id: task.task_id.clone(),
            sentence_id,
            reason,
        }));
    }
    Ok(SynthesisResult {
        alpha_before: alpha_b1(corpus, stopwords),
        alpha_after: alpha_b1(&out, stopwords),
        corpus: out,
        removals,
    })
}

struct TaskState {
    freq: BTreeMap<Bigram, usize>,
    /// Per sentence, occurrence counts of summary bigrams.
    holds: Vec<BTreeMap<Bigram, usize>>,
    alive: Vec<bool>,
}

impl TaskState {
    fn new(task: &Task, stopwords: &Stopwords) -> Self {
        let summary = summary_bigrams(task, stopwords);
        let freq = task_bigram_freq(task, stopwords)
            .into_iter()
            .filter(|(b, _)| summary.contains(b))
            .collect();
        let holds = task
            .sentences
            .iter()
            .map(|s| {
                bigram_counts(&s.tokens, stopwords)
                    .into_iter()
                    .filter(|(b, _)| summary.contains(b))
                    .collect()
            })
            .collect();
        TaskState {
            freq,
            alive: vec![true; task.sentences.len()],
            holds,
        }
    }

    fn n_alive(&self) -> usize {
        self.alive.iter().filter(|a| **a).count()
    }

    fn remove(&mut self, j: usize) {
        self.alive[j] = false;
        for (b, c) in &self.holds[j] {
            *self.freq.get_mut(b).expect("tracked bigram") -= c;
        }
    }
}

fn take_fraction<T>(items: &mut Vec<T>, fraction: f64) {
    let keep = (fraction * items.len() as f64).ceil() as usize;
    items.truncate(keep.min(items.len()));
}

fn increase(task: &Task, stopwords: &Stopwords, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<(i64, String)> {
    let mut st = TaskState::new(task, stopwords);
    let mut targets: Vec<Bigram> = st.freq.iter().filter(|(_, &c)| c >= 2).map(|(b, _)| b.clone()).collect();
    targets.shuffle(rng);
    take_fraction(&mut targets, fraction);

    let mut removed = Vec::new();
    for b in targets {
        while st.freq[&b] >= 2 && st.n_alive() > 1 {
            let hosts: Vec<usize> = (0..st.alive.len())
                .filter(|&j| st.alive[j] && st.holds[j].contains_key(&b))
                .filter(|&j| st.holds[j].iter().all(|(c, n)| st.freq[c] > *n))
                .collect();
            let Some(&j) = hosts.choose(rng) else { break };
            let reason = format!("increase: `{b}` occurred {} times", st.freq[&b]);
            st.remove(j);
            removed.push((task.sentences[j].sentence_id, reason));
        }
    }
    removed
}

fn decrease(task: &Task, stopwords: &Stopwords, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<(i64, String)> {
    let mut st = TaskState::new(task, stopwords);
    // A sentence holding only once-occurring summary bigrams shares none of
    // them with another sentence, so eligibility is fixed up front.
    let mut candidates: Vec<usize> = (0..st.alive.len())
        .filter(|&j| !st.holds[j].is_empty() && st.holds[j].keys().all(|c| st.freq[c] == 1))
        .collect();
    candidates.shuffle(rng);
    take_fraction(&mut candidates, fraction);

    let mut removed = Vec::new();
    for j in candidates {
        if st.n_alive() <= 1 {
            break;
        }
        let names: Vec<String> = st.holds[j].keys().map(|b| format!("`{b}`")).collect();
        st.remove(j);
        removed.push((
            task.sentences[j].sentence_id,
            format!("decrease: sole source of {}", names.join(" ")),
        ));
    }
    removed
}

/// `task_id,sentence_id,reason`, reasons quoted.
pub fn write_removal_log(removals: &[Removal], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "task_id,sentence_id,reason")?;
    for r in removals {
        writeln!(
            out,
            "{},{},\"{}\"",
            r.task_id,
            r.sentence_id,
            r.reason.replace('"', "\"\"")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::read_corpus;
    use std::path::Path;

    const TOY: &str = r#"{"kind":"task_meta","task_id":"t","length_budget":4}
{"kind":"sentence","sentence_id":1,"task_id":"t","doc_id":"a","text":"alpha beta one"}
{"kind":"sentence","sentence_id":2,"task_id":"t","doc_id":"b","text":"alpha beta two"}
{"kind":"sentence","sentence_id":3,"task_id":"t","doc_id":"c","text":"gamma delta"}
{"kind":"summary","task_id":"t","summary_index":0,"text":"alpha beta"}
{"kind":"summary","task_id":"t","summary_index":0,"text":"gamma delta"}
{"kind":"summary","task_id":"t","summary_index":0,"text":"epsilon zeta"}
"#;

    fn toy() -> Corpus {
        read_corpus(TOY.as_bytes(), Path::new("toy"), "toy").unwrap()
    }

    fn no_stop() -> Stopwords {
        Stopwords::from_words(Vec::<String>::new())
    }

    #[test]
    fn increase_removes_exactly_one_host_and_both_branches_occur() {
        let mut seen = BTreeSet::new();
        for seed in 0..32 {
            let r = synthesize_alpha(&toy(), Direction::Increase, seed, &no_stop()).unwrap();
            assert_eq!(r.removals.len(), 1);
            let id = r.removals[0].sentence_id;
            assert!(id == 1 || id == 2);
            seen.insert(id);
            assert!(r.alpha_after.unwrap() > r.alpha_before.unwrap());
        }
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn decrease_removes_sole_source() {
        let r = synthesize_alpha(&toy(), Direction::Decrease, 7, &no_stop()).unwrap();
        assert_eq!(r.removals.len(), 1);
        assert_eq!(r.removals[0].sentence_id, 3);
        assert!(r.alpha_after.unwrap() < r.alpha_before.unwrap());
    }

    #[test]
    fn fixed_point_at_alpha_one() {
        let text = r#"{"kind":"task_meta","task_id":"t","length_budget":4}
{"kind":"sentence","sentence_id":1,"task_id":"t","doc_id":"a","text":"alpha beta"}
{"kind":"sentence","sentence_id":2,"task_id":"t","doc_id":"b","text":"gamma delta"}
{"kind":"summary","task_id":"t","summary_index":0,"text":"alpha beta gamma delta"}
"#;
        let c = read_corpus(text.as_bytes(), Path::new("x"), "x").unwrap();
        let r = synthesize_alpha(&c, Direction::Increase, 3, &no_stop()).unwrap();
        assert!(r.removals.is_empty());
        assert_eq!(r.corpus, c);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synthesize_alpha(&toy(), Direction::Increase, 11, &no_stop()).unwrap();
        let b = synthesize_alpha(&toy(), Direction::Increase, 11, &no_stop()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_fraction() {
        let cfg = SynthesisConfig {
            fraction: 1.5,
            ..SynthesisConfig::new(Direction::Decrease, 0)
        };
        assert!(synthesize_alpha_with(&toy(), &cfg, &no_stop()).is_err());
    }
}
