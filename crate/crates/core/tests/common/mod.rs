#![allow(dead_code)]

use std::path::PathBuf;

use covsum::corpus::{Corpus, Genre, MatrixScope, SentenceRecord, Task};
use covsum::linalg::Matrix;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub struct RawInstance {
    pub weights: Vec<f64>,
    pub matrix: Matrix,
    pub lengths: Vec<usize>,
    pub budget: usize,
}

/// Random coverage instance: `n` concepts, `m` sentences, sparse-ish columns.
pub fn random_instance(rng: &mut impl Rng, n: usize, m: usize, binary: bool) -> RawInstance {
    let weights = (0..n).map(|_| rng.gen_range(0..6) as f64 + rng.gen::<f64>()).collect();
    let mut matrix = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            if rng.gen_bool(0.35) {
                let v = if binary { 1.0 } else { rng.gen::<f64>() };
                matrix.set(i, j, v);
            }
        }
    }
    let lengths: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=12)).collect();
    let total: usize = lengths.iter().sum();
    let budget = rng.gen_range(0..=total);
    RawInstance {
        weights,
        matrix,
        lengths,
        budget,
    }
}

/// Objective of a sentence set, summing coverage per concept over ascending
/// sentences and then over ascending concepts.
pub fn set_objective(inst: &RawInstance, chosen: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..inst.matrix.nrows() {
        let mut cover = 0.0;
        for &j in chosen {
            cover += inst.matrix.get(i, j);
        }
        total += inst.weights[i] * f64::min(cover, 1.0);
    }
    total
}

/// Exhaustive search over all feasible subsets. Ties prefer fewer sentences,
/// then the lexicographically smallest ascending index list.
pub fn brute_force(inst: &RawInstance) -> (f64, Vec<usize>) {
    let m = inst.matrix.ncols();
    let mut best = (0.0, Vec::new());
    for mask in 0u32..(1 << m) {
        let chosen: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let len: usize = chosen.iter().map(|&j| inst.lengths[j]).sum();
        if len > inst.budget {
            continue;
        }
        let obj = set_objective(inst, &chosen);
        let better = obj > best.0
            || (obj == best.0
                && (chosen.len() < best.1.len() || (chosen.len() == best.1.len() && chosen < best.1)));
        if better {
            best = (obj, chosen);
        }
    }
    best
}

const VOCAB: &[&str] = &[
    "the", "of", "and", "bias", "error", "sample", "mean", "test", "value", "model", "data", "fit",
    "plot", "class", "in",
];

fn random_words(rng: &mut impl Rng, min: usize, max: usize) -> String {
    let k = rng.gen_range(min..=max);
    (0..k).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect::<Vec<_>>().join(" ")
}

/// Small random corpus over a tiny vocabulary, so bigrams repeat often.
/// Summaries mix input vocabulary with words that never occur in the input.
pub fn random_corpus(rng: &mut impl Rng) -> Corpus {
    let n_tasks = rng.gen_range(1..=3);
    let mut next_id = 0i64;
    let tasks = (0..n_tasks)
        .map(|t| {
            let task_id = format!("t{t}");
            let n_sent = rng.gen_range(2..=9);
            let sentences = (0..n_sent)
                .map(|k| {
                    next_id += 1;
                    let text = random_words(rng, 2, 7);
                    SentenceRecord::new(next_id, task_id.clone(), format!("d{k}"), None, text).unwrap()
                })
                .collect();
            let n_sum = rng.gen_range(1..=2);
            let human_summaries = (0..n_sum)
                .map(|_| {
                    let mut s = vec![random_words(rng, 2, 6)];
                    if rng.gen_bool(0.5) {
                        s.push(format!("novel{} {}", rng.gen_range(0..3), random_words(rng, 1, 3)));
                    }
                    s
                })
                .collect();
            Task {
                task_id,
                prompt: None,
                sentences,
                human_summaries,
                length_budget: rng.gen_range(3..=12),
            }
        })
        .collect();
    Corpus {
        corpus_id: "random".into(),
        genre: Genre::Response,
        tasks,
        matrix_scope: MatrixScope::Corpus,
    }
}
