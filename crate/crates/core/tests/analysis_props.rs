mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{fixture, random_corpus};
use covsum::analysis::attributes::{alpha_b1, compute_attributes, summary_bigrams, task_attributes};
use covsum::analysis::gold::{build_gold_pairs, compare_scores, test_h1};
use covsum::analysis::stats::paired_ttest;
use covsum::analysis::synth::{synthesize_alpha, synthesize_alpha_with, Direction, SynthesisConfig};
use covsum::analysis::tune::{default_grid, tune_lambda};
use covsum::concepts::{extract_bigrams, Bigram, Stopwords};
use covsum::corpus::{load_annotations, load_corpus, Corpus};
use covsum::summarize::{Summarizer, SummarizerSettings, System};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_from_seed(seed: u64) -> Corpus {
    random_corpus(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn sw() -> Stopwords {
    Stopwords::builtin()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn increase_never_lowers_alpha(corpus_seed in any::<u64>(), seed in any::<u64>(), fraction in 0.0f64..=1.0) {
        let c = corpus_from_seed(corpus_seed);
        let cfg = SynthesisConfig { fraction, ..SynthesisConfig::new(Direction::Increase, seed) };
        let r = synthesize_alpha_with(&c, &cfg, &sw()).unwrap();
        if let (Some(before), Some(after)) = (r.alpha_before, r.alpha_after) {
            prop_assert!(after >= before - 1e-12, "{} -> {}", before, after);
        }
        // summary bigrams present in the input never disappear
        for (orig, new) in c.tasks.iter().zip(&r.corpus.tasks) {
            let s = summary_bigrams(orig, &sw());
            let present = |t: &covsum::corpus::Task| -> BTreeSet<Bigram> {
                t.sentences.iter().flat_map(|x| extract_bigrams(&x.tokens, &sw())).filter(|b| s.contains(b)).collect()
            };
            prop_assert_eq!(present(orig), present(new));
            prop_assert!(!new.sentences.is_empty());
        }
    }

    #[test]
    fn decrease_never_raises_alpha(corpus_seed in any::<u64>(), seed in any::<u64>(), fraction in 0.0f64..=1.0) {
        let c = corpus_from_seed(corpus_seed);
        let cfg = SynthesisConfig { fraction, ..SynthesisConfig::new(Direction::Decrease, seed) };
        let r = synthesize_alpha_with(&c, &cfg, &sw()).unwrap();
        if let (Some(before), Some(after)) = (r.alpha_before, r.alpha_after) {
            prop_assert!(after <= before + 1e-12, "{} -> {}", before, after);
        }
        for t in &r.corpus.tasks {
            prop_assert!(!t.sentences.is_empty());
        }
    }

    #[test]
    fn attribute_identities(corpus_seed in any::<u64>()) {
        let c = corpus_from_seed(corpus_seed);
        let r = compute_attributes(&c, &sw()).unwrap();
        prop_assert!((r.alpha_gt0 + r.alpha_eq0 - 1.0).abs() < 1e-9);
        prop_assert!((r.alpha_eq1 + r.alpha_gt1 - r.alpha_gt0).abs() < 1e-9);
        prop_assert!((r.b1 + r.b_gt1 - 1.0).abs() < 1e-9);
        prop_assert!(r.h >= 0.0);
        prop_assert!((0.0..=1.0).contains(&r.s));
        for b in r.beta.iter().chain([&r.beta_gt1]) {
            prop_assert!((0.0..=1.0).contains(b));
        }
        for t in &r.per_task {
            if let Some(a) = t.alpha {
                prop_assert!((a.gt0 + a.eq0 - 1.0).abs() < 1e-9);
                prop_assert!((a.eq1 + a.gt1 - a.gt0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic(corpus_seed in any::<u64>(), seed in any::<u64>()) {
        let c = corpus_from_seed(corpus_seed);
        for d in [Direction::Increase, Direction::Decrease] {
            prop_assert_eq!(synthesize_alpha(&c, d, seed, &sw()).unwrap(), synthesize_alpha(&c, d, seed, &sw()).unwrap());
        }
    }
}

#[test]
fn twenty_corpora_five_seeds() {
    for cs in 0..20u64 {
        let c = corpus_from_seed(cs);
        let base = alpha_b1(&c, &sw());
        for seed in 0..5 {
            let up = synthesize_alpha(&c, Direction::Increase, seed, &sw()).unwrap();
            let down = synthesize_alpha(&c, Direction::Decrease, seed, &sw()).unwrap();
            assert_eq!(up.alpha_before, base);
            if let Some(b) = base {
                assert!(up.alpha_after.unwrap() >= b, "corpus {cs} seed {seed}");
                assert!(down.alpha_after.unwrap() <= b, "corpus {cs} seed {seed}");
            }
        }
    }
}

#[test]
fn uniform_bigrams_have_entropy_ln_k() {
    let text = r#"{"kind":"task_meta","task_id":"t","length_budget":3}
{"kind":"sentence","sentence_id":1,"task_id":"t","doc_id":"a","text":"alpha beta"}
{"kind":"sentence","sentence_id":2,"task_id":"t","doc_id":"b","text":"gamma delta"}
{"kind":"sentence","sentence_id":3,"task_id":"t","doc_id":"c","text":"epsilon zeta"}
{"kind":"sentence","sentence_id":4,"task_id":"t","doc_id":"d","text":"eta theta"}
{"kind":"summary","task_id":"t","summary_index":0,"text":"alpha beta"}
"#;
    let c = covsum::corpus::read_corpus(text.as_bytes(), std::path::Path::new("u"), "u").unwrap();
    let t = task_attributes(&c.tasks[0], &sw());
    assert!((t.shannon.unwrap() - 4f64.ln()).abs() < 1e-12);
}

fn toy() -> Corpus {
    load_corpus(fixture("toy.jsonl")).unwrap()
}

#[test]
fn h1a_negatives_hold_nothing_similar() {
    let corpus = toy();
    let ann = load_annotations(fixture("toy_annotations.jsonl"), &corpus).unwrap();
    let gold = build_gold_pairs(&ann, &corpus, &sw());
    assert!(!gold.triples_h1a.is_empty());
    assert!(!gold.triples_h1b.is_empty());

    let similar = |task: &str, a: &Bigram, b: &Bigram| {
        gold.similar.iter().any(|p| p.task_id == task && ((&p.a == a && &p.b == b) || (&p.a == b && &p.b == a)))
    };
    let bigrams_of = |id: i64| -> BTreeSet<Bigram> {
        let s = corpus.sentences().find(|s| s.sentence_id == id).unwrap();
        extract_bigrams(&s.tokens, &sw()).into_iter().collect()
    };
    for t in &gold.triples_h1a {
        let neg = bigrams_of(t.neg_sentence);
        assert!(!neg.contains(&t.bigram), "{t:?}");
        assert!(!neg.iter().any(|b| similar(&t.task_id, &t.bigram, b)), "{t:?}");
        assert!(bigrams_of(t.pos_sentence).iter().any(|b| similar(&t.task_id, &t.bigram, b)), "{t:?}");
    }
    for t in &gold.triples_h1b {
        let j = bigrams_of(t.sentence);
        assert!(!j.contains(&t.neg_bigram), "{t:?}");
        assert!(!j.iter().any(|b| similar(&t.task_id, &t.neg_bigram, b)), "{t:?}");
    }
    // no pair is both similar and different
    for p in &gold.similar {
        assert!(!gold.different.contains(p));
    }
}

#[test]
fn h1_means_read_the_completed_matrix() {
    let corpus = toy();
    let ann = load_annotations(fixture("toy_annotations.jsonl"), &corpus).unwrap();
    let gold = build_gold_pairs(&ann, &corpus, &sw());
    let settings = SummarizerSettings {
        min_freq: 1,
        ..Default::default()
    };
    let s = Summarizer::new(&corpus, settings, Arc::new(sw())).unwrap();
    let completions = s.complete(0.0).unwrap();
    let completed = completions[0].as_ref().unwrap();
    let table = &s.space().blocks[0].table;
    let report = test_h1(completed, table, &gold).unwrap();

    let cell = |b: &Bigram, j: i64| completed.get(table.index_of(b).unwrap(), completed.column_of(j).unwrap());
    let pos: Vec<f64> = gold.triples_h1a.iter().map(|t| cell(&t.bigram, t.pos_sentence)).collect();
    let neg: Vec<f64> = gold.triples_h1a.iter().map(|t| cell(&t.bigram, t.neg_sentence)).collect();
    let n = pos.len() as f64;
    assert_eq!(report.h1a.n, pos.len());
    assert!((report.h1a.mean_pos - pos.iter().sum::<f64>() / n).abs() < 1e-12);
    assert!((report.h1a.mean_neg - neg.iter().sum::<f64>() / n).abs() < 1e-12);
    assert_eq!(report.h1a.ttest, Some(paired_ttest(&pos, &neg).unwrap()));
    // at lambda = 0 the completion is A itself, and j- never holds i
    assert!(neg.iter().all(|&v| v == 0.0));
}

#[test]
fn closed_form_t_on_hand_values() {
    // differences 0.3, 0.1, 0.2: mean 0.2, sd 0.1, t = 0.2 / (0.1 / sqrt 3)
    let pairs = [(0.5, 0.2), (0.4, 0.3), (0.9, 0.7)];
    let h = compare_scores(&pairs, 0).unwrap();
    let t = h.ttest.unwrap().t_statistic;
    assert!((t - 0.2 / (0.1 / 3f64.sqrt())).abs() < 1e-9);
    assert!((h.mean_pos - 0.6).abs() < 1e-12);
    assert!((h.mean_neg - 0.4).abs() < 1e-12);
}

#[test]
fn equal_scores_give_p_one() {
    let h = compare_scores(&[(0.3, 0.3), (0.3, 0.3), (0.3, 0.3)], 0).unwrap();
    let t = h.ttest.unwrap();
    assert_eq!(t.p_value, 1.0);
    assert_eq!(h.mean_pos, h.mean_neg);
}

#[test]
fn single_triple_has_no_test() {
    let h = compare_scores(&[(0.8, 0.1)], 0).unwrap();
    assert!(h.ttest.is_none());
    assert_eq!(h.n, 1);
}

#[test]
fn tuning_has_one_fold_per_task() {
    let corpus = toy();
    let s = Summarizer::new(&corpus, SummarizerSettings::default(), Arc::new(sw())).unwrap();
    let r = tune_lambda(&s, &[0.0, 1.0]).unwrap();
    assert_eq!(r.folds.len(), 3);
    assert_eq!(r.scores.len(), 2);
    assert!(r.scores.iter().all(|row| row.len() == 3));
    for (held, fold) in r.folds.iter().enumerate() {
        let g = r.grid.iter().position(|l| *l == fold.lambda).unwrap();
        let train: f64 = r.scores[g].iter().enumerate().filter(|(t, _)| *t != held).map(|(_, v)| v).sum::<f64>() / 2.0;
        assert!((fold.train_score - train).abs() < 1e-12);
    }
    assert_eq!(default_grid().len(), 11);
}

#[test]
fn tuning_picks_zero_when_references_are_the_ilp_output() {
    let mut corpus = toy();
    let settings = SummarizerSettings {
        min_freq: 1,
        ..Default::default()
    };
    let ilp = {
        let s = Summarizer::new(&corpus, settings.clone(), Arc::new(sw())).unwrap();
        s.run(System::Ilp, None).unwrap()
    };
    for (task, summary) in corpus.tasks.iter_mut().zip(&ilp) {
        task.human_summaries = vec![vec![summary.text.clone()]];
    }
    let s = Summarizer::new(&corpus, settings, Arc::new(sw())).unwrap();
    let r = tune_lambda(&s, &default_grid()).unwrap();
    for f in &r.folds {
        assert_eq!(f.lambda, 0.0, "{f:?}");
        assert_eq!(f.test_score, 1.0);
    }
}

#[test]
fn tuning_rejects_single_task() {
    let mut corpus = toy();
    corpus.tasks.truncate(1);
    let s = Summarizer::new(&corpus, SummarizerSettings::default(), Arc::new(sw())).unwrap();
    assert!(tune_lambda(&s, &default_grid()).is_err());
}
