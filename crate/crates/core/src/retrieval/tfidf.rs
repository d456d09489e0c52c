use std::collections::HashMap;

use super::bm25::Bm25Index;
use crate::text::tokens;

/// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`, taken
/// from the graph-wide index so unseen words still get a weight.
pub fn tfidf_idf(index: &Bm25Index, term: &str) -> f64 {
    let n = index.n_docs() as f64;
    ((1.0 + n) / (1.0 + index.df(term) as f64)).ln() + 1.0
}

/// Sparse TF-IDF vector with raw term counts.
pub fn tfidf_vector(index: &Bm25Index, text: &str) -> HashMap<String, f64> {
    let mut tf: HashMap<String, f64> = HashMap::new();
    for t in tokens(text) {
        *tf.entry(t).or_default() += 1.0;
    }
    for (t, w) in tf.iter_mut() {
        *w *= tfidf_idf(index, t);
    }
    tf
}

fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let num: f64 = small
        .iter()
        .filter_map(|(t, w)| large.get(t).map(|v| w * v))
        .sum();
    let na = a.values().map(|w| w * w).sum::<f64>().sqrt();
    let nb = b.values().map(|w| w * w).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        num / (na * nb)
    }
}

/// Ranks `sentences` by TF-IDF cosine similarity to `claim`. Returns
/// `(position in sentences, score)` by descending score; equal scores keep
/// their input order.
pub fn tfidf_rank<S: AsRef<str>>(
    index: &Bm25Index,
    claim: &str,
    sentences: &[S],
) -> Vec<(usize, f64)> {
    let q = tfidf_vector(index, claim);
    let mut ranked: Vec<(usize, f64)> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| (i, cosine(&q, &tfidf_vector(index, s.as_ref()))))
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn index() -> Bm25Index {
        let mut b = GraphBuilder::new();
        for (i, t) in ["the cat sat", "the dog ran", "a bird flew"]
            .iter()
            .enumerate()
        {
            b.add_node(i as u32, "", 0, *t);
        }
        Bm25Index::build(&b.build()).unwrap()
    }

    #[test]
    fn identical_sentence_ranks_first() {
        let idx = index();
        let r = tfidf_rank(
            &idx,
            "the cat sat",
            &["a dog ran", "the cat sat", "the cat"],
        );
        assert_eq!(r[0].0, 1);
        assert!((r[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_sentence_scores_zero() {
        let idx = index();
        let r = tfidf_rank(&idx, "cat", &["bird flew", "..."]);
        assert!(r.iter().all(|&(_, s)| s == 0.0));
        assert_eq!(r[0].0, 0);
    }
}
