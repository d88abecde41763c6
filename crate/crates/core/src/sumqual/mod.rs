//! Summary quality and diversity: ROUGE-1/2/L against a reference, BLEU and
//! Self-BLEU across a summary set, and mean pairwise embedding similarity.
//!
//! All n-gram metrics run over lowercased, punctuation-stripped words.

mod embed;

use std::collections::HashMap;

pub use embed::{
    cosine, pairwise_similarity, EmbedError, Embedder, HttpEmbedBackend, EmbedBackend, RemoteEmbedder, Similarity,
    TfidfEmbedder,
};

use crate::text::lower_words;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Prf {
    fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (precision, recall) = (ratio(overlap, candidate), ratio(overlap, reference));
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f }
    }
}

/// Multiset of the n-grams of a word sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramProfile {
    pub n: usize,
    pub counts: HashMap<Vec<String>, usize>,
}

impl NgramProfile {
    pub fn new(words: &[String], n: usize) -> Self {
        assert!(n >= 1, "n-gram order must be at least 1");
        let mut counts = HashMap::new();
        for g in words.windows(n) {
            *counts.entry(g.to_vec()).or_insert(0) += 1;
        }
        Self { n, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Candidate counts clipped by this profile's counts.
    pub fn clipped_overlap(&self, candidate: &NgramProfile) -> usize {
        candidate
            .counts
            .iter()
            .map(|(g, &c)| c.min(self.counts.get(g).copied().unwrap_or(0)))
            .sum()
    }
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> Prf {
    let c = NgramProfile::new(&lower_words(candidate), n);
    let r = NgramProfile::new(&lower_words(reference), n);
    Prf::from_counts(r.clipped_overlap(&c), c.total(), r.total())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l(candidate: &str, reference: &str) -> Prf {
    let c = lower_words(candidate);
    let r = lower_words(reference);
    Prf::from_counts(lcs_len(&c, &r), c.len(), r.len())
}

pub const BLEU_MAX_N: usize = 4;

/// Sentence BLEU against one reference: geometric mean of 1..4-gram
/// precisions with add-one smoothing above unigrams, times the brevity
/// penalty.
pub fn bleu(candidate: &str, reference: &str) -> f64 {
    let c = lower_words(candidate);
    let r = lower_words(reference);
    if c.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=BLEU_MAX_N {
        let cp = NgramProfile::new(&c, n);
        let rp = NgramProfile::new(&r, n);
        let (m, t) = (rp.clipped_overlap(&cp), cp.total());
        let p = if n == 1 {
            if m == 0 {
                return 0.0;
            }
            m as f64 / t as f64
        } else {
            (m + 1) as f64 / (t + 1) as f64
        };
        log_sum += p.ln();
    }
    let bp = if c.len() > r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / c.len() as f64).exp()
    };
    bp * (log_sum / BLEU_MAX_N as f64).exp()
}

/// Mean BLEU over ordered pairs, each summary scored against each other one.
/// `None` for fewer than two summaries.
pub fn self_bleu<S: AsRef<str>>(summaries: &[S]) -> Option<f64> {
    let k = summaries.len();
    if k < 2 {
        return None;
    }
    let mut total = 0.0;
    for (i, c) in summaries.iter().enumerate() {
        for (j, r) in summaries.iter().enumerate() {
            if i != j {
                total += bleu(c.as_ref(), r.as_ref());
            }
        }
    }
    Some(total / (k * (k - 1)) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn rouge1_hand_case() {
        let p = rouge_n("the cat", "the cat sat", 1);
        assert!(close(p.precision, 1.0) && close(p.recall, 2.0 / 3.0) && close(p.f, 0.8));
    }

    #[test]
    fn rouge_extremes() {
        let id = rouge_n("A dog, barking.", "a dog barking", 2);
        assert_eq!((id.precision, id.recall, id.f), (1.0, 1.0, 1.0));
        let d = rouge_n("alpha beta", "gamma delta", 1);
        assert_eq!((d.precision, d.recall, d.f), (0.0, 0.0, 0.0));
        // too short for bigrams on either side
        let e = rouge_n("x", "x", 2);
        assert_eq!(e.f, 0.0);
    }

    #[test]
    fn clipping() {
        // "the" appears 3 times in the candidate but once in the reference
        let p = rouge_n("the the the", "the cat", 1);
        assert!(close(p.precision, 1.0 / 3.0) && close(p.recall, 0.5));
    }

    #[test]
    fn rouge_l_hand_case() {
        let p = rouge_l("a b c d", "a c d e");
        assert!(close(p.precision, 0.75) && close(p.recall, 0.75) && close(p.f, 0.75));
        assert_eq!(rouge_l("", "a b").f, 0.0);
        assert_eq!(rouge_l("x y z", "x y z").f, 1.0);
    }

    #[test]
    fn bleu_cases() {
        assert_eq!(bleu("the cat sat on the mat", "the cat sat on the mat"), 1.0);
        assert_eq!(bleu("one two", "three four"), 0.0);
        assert_eq!(bleu("", "x"), 0.0);
        // "the cat" vs "the cat sat": p1 = 1, p2 = 2/2, p3 = 1/1, p4 = 1/1, BP = exp(1 - 3/2)
        assert!(close(bleu("the cat", "the cat sat"), (-0.5f64).exp()));
    }

    #[test]
    fn self_bleu_identical_and_disjoint() {
        let same = ["Some summary text here."; 5];
        assert_eq!(self_bleu(&same), Some(1.0));
        let disjoint = ["alpha beta gamma", "delta epsilon zeta", "eta theta iota"];
        assert!(self_bleu(&disjoint).unwrap() < 0.05);
        assert_eq!(self_bleu(&["only one"]), None);
    }

    fn text() -> impl Strategy<Value = String> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]), 0..12).prop_map(|v| v.join(" "))
    }

    proptest! {
        #[test]
        fn rouge_f_symmetric(c in text(), r in text(), n in 1usize..4) {
            let a = rouge_n(&c, &r, n);
            let b = rouge_n(&r, &c, n);
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert!((a.f - b.f).abs() < 1e-15);
        }

        #[test]
        fn self_bleu_bounded_and_order_free(mut v in prop::collection::vec(text(), 2..6), rot in 0usize..6) {
            let s = self_bleu(&v).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
            let k = rot % v.len();
            v.rotate_left(k);
            v.reverse();
            prop_assert!((self_bleu(&v).unwrap() - s).abs() < 1e-12);
        }
    }
}
