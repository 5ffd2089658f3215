use covsum::rouge::{lcs_len, rouge_l, rouge_n, rouge_su4, score_tokens, Metric};
use proptest::prelude::*;

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 0..25)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn nonempty_words() -> impl Strategy<Value = Vec<String>> {
    words().prop_filter("non-empty", |v| !v.is_empty())
}

/// ROUGE-2 has no units on a one-token text, so identity needs two tokens.
fn two_plus_words() -> impl Strategy<Value = Vec<String>> {
    words().prop_filter("at least two tokens", |v| v.len() >= 2)
}

/// Textbook O(nm) LCS table, independent of the library's row-rolling version.
fn lcs_table(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

proptest! {
    #[test]
    fn identity_scores_one(text in two_plus_words()) {
        let s = score_tokens(&text, std::slice::from_ref(&text)).unwrap();
        for m in Metric::ALL {
            prop_assert_eq!(s.get(m).recall, 1.0, "{}", m);
            prop_assert_eq!(s.get(m).precision, 1.0, "{}", m);
        }
    }

    #[test]
    fn scores_in_unit_interval(c in words(), r in words(), r2 in words()) {
        let refs = [r, r2];
        let s = score_tokens(&c, &refs).unwrap();
        for m in Metric::ALL {
            let x = s.get(m);
            for v in [x.recall, x.precision, x.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let hm = if x.recall + x.precision > 0.0 {
                2.0 * x.recall * x.precision / (x.recall + x.precision)
            } else {
                0.0
            };
            prop_assert!((x.f1 - hm).abs() < 1e-15);
        }
    }

    #[test]
    fn appending_reference_tokens_never_lowers_recall(c in words(), r in nonempty_words(), k in 0usize..25) {
        let refs = [r.clone()];
        let mut longer = c.clone();
        longer.extend(r.iter().take(k).cloned());
        for n in [1, 2] {
            prop_assert!(rouge_n(&longer, &refs, n).unwrap().recall >= rouge_n(&c, &refs, n).unwrap().recall);
        }
        prop_assert!(rouge_su4(&longer, &refs).unwrap().recall >= rouge_su4(&c, &refs).unwrap().recall);
        prop_assert!(rouge_l(&longer, &refs).unwrap().recall >= rouge_l(&c, &refs).unwrap().recall);
    }

    #[test]
    fn lcs_matches_table(a in words(), b in words()) {
        prop_assert_eq!(lcs_len(&a, &b), lcs_table(&a, &b));
        prop_assert_eq!(lcs_len(&a, &b), lcs_len(&b, &a));
    }

    #[test]
    fn extra_reference_never_lowers_recall(c in words(), r in nonempty_words(), r2 in nonempty_words()) {
        let one = rouge_n(&c, std::slice::from_ref(&r), 1).unwrap().recall;
        let two = rouge_n(&c, &[r, r2], 1).unwrap().recall;
        prop_assert!(two >= one);
    }
}

#[test]
fn single_token_has_no_bigram_units() {
    let a = vec!["a".to_string()];
    let s = score_tokens(&a, std::slice::from_ref(&a)).unwrap();
    assert_eq!(s.get(Metric::Rouge1).recall, 1.0);
    assert_eq!(s.get(Metric::RougeSu4).recall, 1.0);
    assert_eq!(s.get(Metric::RougeL).recall, 1.0);
    assert_eq!(s.get(Metric::Rouge2).recall, 0.0);
}
