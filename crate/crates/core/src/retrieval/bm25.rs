use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::text::tokens;

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;

/// Okapi BM25 over every node's title and text.
#[derive(Clone, Debug)]
pub struct Bm25Index {
    pub k1: f64,
    pub b: f64,
    doc_len: Vec<u32>,
    avgdl: f64,
    /// term -> (node index, term frequency), in node order
    postings: HashMap<String, Vec<(u32, u32)>>,
}

impl Bm25Index {
    pub fn build(g: &Graph) -> Result<Self> {
        Self::with_params(g, K1, B)
    }

    pub fn with_params(g: &Graph, k1: f64, b: f64) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::invalid("cannot index an empty graph"));
        }
        if !(k1 >= 0.0) || !(0.0..=1.0).contains(&b) {
            return Err(Error::invalid("BM25 needs k1 >= 0 and b in [0, 1]"));
        }
        let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        let mut doc_len = Vec::with_capacity(g.len());
        for n in g.nodes() {
            let mut tf: HashMap<String, u32> = HashMap::new();
            let mut len = 0u32;
            for t in tokens(&n.title).chain(tokens(&n.text)) {
                *tf.entry(t).or_default() += 1;
                len += 1;
            }
            for (t, c) in tf {
                postings.entry(t).or_default().push((n.id.0, c));
            }
            doc_len.push(len);
        }
        for p in postings.values_mut() {
            p.sort_unstable();
        }
        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avgdl = (total as f64 / doc_len.len() as f64).max(1.0);
        Ok(Bm25Index {
            k1,
            b,
            doc_len,
            avgdl,
            postings,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.doc_len.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_len(&self, node: NodeId) -> u32 {
        self.doc_len[node.index()]
    }

    /// Number of nodes containing `term`.
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn tf(&self, term: &str, node: NodeId) -> u32 {
        self.postings
            .get(term)
            .and_then(|p| {
                p.binary_search_by_key(&node.0, |&(n, _)| n)
                    .ok()
                    .map(|i| p[i].1)
            })
            .unwrap_or(0)
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`, which stays positive for
    /// terms present in most nodes.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n_docs() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_weight(&self, tf: u32, len: u32) -> f64 {
        let tf = tf as f64;
        let norm = 1.0 - self.b + self.b * len as f64 / self.avgdl;
        tf * (self.k1 + 1.0) / (tf + self.k1 * norm)
    }

    /// Distinct query terms; a term repeated in the query counts once.
    fn query_terms(query: &str) -> Result<BTreeSet<String>> {
        let terms: BTreeSet<String> = tokens(query).collect();
        if terms.is_empty() {
            return Err(Error::NoTokens);
        }
        Ok(terms)
    }

    /// BM25 score of one node for `query`.
    pub fn score(&self, query: &str, node: NodeId) -> Result<f64> {
        if node.index() >= self.n_docs() {
            return Err(Error::UnknownNode(node));
        }
        let len = self.doc_len[node.index()];
        Ok(Self::query_terms(query)?
            .iter()
            .map(|t| match self.tf(t, node) {
                0 => 0.0,
                tf => self.idf(t) * self.term_weight(tf, len),
            })
            .sum())
    }

    /// Scores of every node.
    pub fn scores(&self, query: &str) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.n_docs()];
        for t in Self::query_terms(query)? {
            if let Some(p) = self.postings.get(&t) {
                let idf = self.idf(&t);
                for &(n, tf) in p {
                    acc[n as usize] += idf * self.term_weight(tf, self.doc_len[n as usize]);
                }
            }
        }
        Ok(acc)
    }
}

/// The `k` best nodes for `query`, by descending score with ties to the
/// lowest id. Nodes scoring zero fill the list when fewer than `k` match.
pub fn bm25_top_k(index: &Bm25Index, query: &str, k: usize) -> Result<Vec<(NodeId, f64)>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let scores = index.scores(query)?;
    let mut ranked: Vec<(NodeId, f64)> = scores
        .into_iter()
        .enumerate()
        .map(|(i, s)| (NodeId::from(i), s))
        .collect();
    let cmp = |a: &(NodeId, f64), b: &(NodeId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, cmp);
        ranked.truncate(k);
    }
    ranked.sort_by(cmp);
    Ok(ranked)
}
