//! Node, target and sentence embeddings.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{rng_from, splitmix64};
use crate::text::tokens;

pub type EmbeddingVector = Vec<f64>;

pub const DEFAULT_DIM: usize = 256;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbedderKind {
    #[default]
    HashedBow,
    RandomFeature,
    Precomputed,
}

/// Only one tokenization is implemented: lowercase alphanumeric runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenPattern {
    #[default]
    AlnumLower,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub token_pattern: TokenPattern,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            kind: EmbedderKind::HashedBow,
            dim: DEFAULT_DIM,
            seed: 0,
            token_pattern: TokenPattern::AlnumLower,
        }
    }
}

impl EmbedderConfig {
    pub fn hashed(dim: usize, seed: u64) -> Self {
        EmbedderConfig {
            kind: EmbedderKind::HashedBow,
            dim,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 8 {
            return Err(Error::invalid(format!(
                "embedding dimension {} below 8",
                self.dim
            )));
        }
        Ok(())
    }

    /// Stable fingerprint stored in checkpoints so a policy is never paired
    /// with vectors from a different space.
    pub fn fingerprint(&self) -> u64 {
        let kind = match self.kind {
            EmbedderKind::HashedBow => 1,
            EmbedderKind::RandomFeature => 2,
            EmbedderKind::Precomputed => 3,
        };
        [kind, self.dim as u64, self.seed]
            .iter()
            .fold(0x9e37_79b9_7f4a_7c15, |h, &v| splitmix64(h ^ v))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Bucket and sign of a token under a hash seed.
pub fn token_slot(token: &str, dim: usize, seed: u64) -> (usize, f64) {
    let h = splitmix64(fnv1a(token.as_bytes()) ^ seed);
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    ((h % dim as u64) as usize, sign)
}

fn hashed_bow<'a>(
    cfg: &EmbedderConfig,
    toks: impl Iterator<Item = String> + 'a,
) -> Result<EmbeddingVector> {
    let mut acc = vec![0.0; cfg.dim];
    let mut n = 0usize;
    for t in toks {
        let (slot, sign) = token_slot(&t, cfg.dim, cfg.seed);
        acc[slot] += sign;
        n += 1;
    }
    if n == 0 {
        return Err(Error::NoTokens);
    }
    // tanh(mean * sqrt(n)) = tanh(sum / sqrt(n))
    let scale = 1.0 / (n as f64).sqrt();
    // tanh saturates to exactly 1.0 in f64 for large inputs; keep entries open
    let bound = 1.0 - f64::EPSILON;
    Ok(acc
        .into_iter()
        .map(|v| (v * scale).tanh().clamp(-bound, bound))
        .collect())
}

/// Hashed bag-of-words embedding of a node: the title followed by its text.
pub fn embed_text(cfg: &EmbedderConfig, text: &str, title: &str) -> Result<EmbeddingVector> {
    cfg.validate()?;
    hashed_bow(cfg, tokens(title).chain(tokens(text)))
}

/// Embedding of a target sentence: the node pipeline without a title.
pub fn embed_target_sentence(cfg: &EmbedderConfig, sentence: &str) -> Result<EmbeddingVector> {
    cfg.validate()?;
    hashed_bow(cfg, tokens(sentence))
}

/// Gaussian direction normalized to the unit sphere, fixed per (id, seed).
pub fn random_feature_embed(node: NodeId, seed: u64, dim: usize) -> EmbeddingVector {
    let mut rng = rng_from(seed, &[0x5eed_f00d, node.0 as u64]);
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Row-major table of node vectors, indexed by node id.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    data: Arc<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn from_rows(dim: usize, rows: Vec<EmbeddingVector>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has dimension {}, expected {dim}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(EmbeddingTable {
            dim,
            data: Arc::new(data),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, id: NodeId) -> &[f64] {
        &self.data[id.index() * self.dim..(id.index() + 1) * self.dim]
    }
}

/// Embeds every node of a graph with the configured provider.
pub fn embed_graph(cfg: &EmbedderConfig, g: &Graph) -> Result<EmbeddingTable> {
    cfg.validate()?;
    let rows: Vec<EmbeddingVector> = match cfg.kind {
        EmbedderKind::HashedBow => g
            .nodes()
            .par_iter()
            .map(|n| embed_text(cfg, &n.text, &n.title))
            .collect::<Result<_>>()?,
        EmbedderKind::RandomFeature => g
            .node_ids()
            .map(|id| random_feature_embed(id, cfg.seed, cfg.dim))
            .collect(),
        EmbedderKind::Precomputed => {
            return Err(Error::invalid(
                "precomputed vectors must be loaded with load_vectors",
            ))
        }
    };
    EmbeddingTable::from_rows(cfg.dim, rows)
}

/// Writes vectors as `count: u64 LE, dim: u64 LE`, then `count * dim` f32 LE
/// values in node-id order.
pub fn save_vectors(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(16 + 4 * table.data.len());
    out.extend_from_slice(&(table.len() as u64).to_le_bytes());
    out.extend_from_slice(&(table.dim as u64).to_le_bytes());
    for &v in table.data.iter() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a vector file for `g`; fails unless it holds exactly one finite
/// vector of dimension `dim` per node.
pub fn load_vectors(path: impl AsRef<Path>, g: &Graph, dim: usize) -> Result<EmbeddingTable> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(Error::corrupt(0, "vector file header truncated"));
    }
    let count = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if count != g.len() {
        return Err(Error::invalid(format!(
            "vector file has {count} rows, graph has {} nodes",
            g.len()
        )));
    }
    if d != dim {
        return Err(Error::invalid(format!(
            "vector file has dimension {d}, expected {dim}"
        )));
    }
    let expected = count
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(16));
    if expected != Some(bytes.len()) {
        return Err(Error::corrupt(
            16,
            "vector file length does not match header",
        ));
    }
    let data: Vec<f64> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::corrupt(16 + 4 * i as u64, "non-finite value"));
    }
    Ok(EmbeddingTable {
        dim: d,
        data: Arc::new(data),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::seq::IndexedRandom;
    use rand::Rng;

    fn cfg() -> EmbedderConfig {
        EmbedderConfig::hashed(256, 7)
    }

    #[test]
    fn deterministic_and_order_free() {
        let a = embed_text(&cfg(), "alpha beta gamma", "T").unwrap();
        assert_eq!(a, embed_text(&cfg(), "alpha beta gamma", "T").unwrap());
        assert_eq!(
            embed_text(&cfg(), "a b", "x").unwrap(),
            embed_text(&cfg(), "b a", "x").unwrap()
        );
    }

    #[test]
    fn no_tokens_is_an_error() {
        assert!(matches!(embed_text(&cfg(), "", ""), Err(Error::NoTokens)));
        assert!(matches!(
            embed_target_sentence(&cfg(), " ... "),
            Err(Error::NoTokens)
        ));
    }

    #[test]
    fn entries_are_bounded_and_finite() {
        let v = embed_text(&cfg(), &"word ".repeat(10_000), "T\u{1F600}").unwrap();
        assert!(v.iter().all(|x| x.is_finite() && x.abs() < 1.0));
    }

    #[test]
    fn single_word_sentence() {
        let c = cfg();
        let v = embed_target_sentence(&c, "zebra").unwrap();
        let (slot, sign) = token_slot("zebra", 256, 7);
        for (i, x) in v.iter().enumerate() {
            let want = if i == slot {
                (sign * 1.0f64).tanh()
            } else {
                0.0
            };
            assert_eq!(*x, want);
        }
    }

    #[test]
    fn sentence_equal_to_text_matches_titleless_node() {
        let t = "one two three. four five";
        assert_eq!(
            embed_target_sentence(&cfg(), t).unwrap(),
            embed_text(&cfg(), t, "").unwrap()
        );
    }

    #[test]
    fn shared_tokens_raise_similarity() {
        let mut rng = rng_from(11, &[]);
        let vocab: Vec<String> = (0..5000).map(|i| format!("tok{i}")).collect();
        let mut wins = 0;
        for _ in 0..100 {
            let base: Vec<&String> = (0..100).map(|_| vocab.choose(&mut rng).unwrap()).collect();
            let mut near = base.clone();
            for t in near.iter_mut().take(10) {
                *t = vocab.choose(&mut rng).unwrap();
            }
            let far: Vec<&String> = (0..100).map(|_| vocab.choose(&mut rng).unwrap()).collect();
            let join = |v: &[&String]| v.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" ");
            let b = embed_text(&cfg(), &join(&base), "t").unwrap();
            let n = embed_text(&cfg(), &join(&near), "t").unwrap();
            let f = embed_text(&cfg(), &join(&far), "u").unwrap();
            if cosine_similarity(&b, &n).unwrap() > cosine_similarity(&b, &f).unwrap() {
                wins += 1;
            }
        }
        assert_eq!(wins, 100);
    }

    #[test]
    fn random_features_are_unit_and_nearly_orthogonal() {
        let vs: Vec<_> = (0..1000)
            .map(|i| random_feature_embed(NodeId(i), 3, 256))
            .collect();
        for v in &vs {
            assert!((norm(v) - 1.0).abs() <= 1e-9);
        }
        assert_eq!(vs[5], random_feature_embed(NodeId(5), 3, 256));
        let mut rng = rng_from(1, &[]);
        let mut total = 0.0;
        let pairs = 5000;
        for _ in 0..pairs {
            let (i, j) = (rng.random_range(0..1000), rng.random_range(0..1000));
            if i != j {
                total += cosine_similarity(&vs[i], &vs[j]).unwrap();
            }
        }
        assert!((total / pairs as f64).abs() < 0.1);
    }

    #[test]
    fn cosine_basics() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn vector_file_round_trip_and_checks() {
        let g = crate::graph::test_graphs::chain(5);
        let c = cfg();
        let table = embed_graph(&c, &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.bin");
        save_vectors(&table, &p).unwrap();
        let back = load_vectors(&p, &g, 256).unwrap();
        for id in g.node_ids() {
            for (a, b) in table.get(id).iter().zip(back.get(id)) {
                assert!((a - b).abs() < 1e-6);
            }
        }
        assert!(load_vectors(&p, &g, 128).is_err());
        assert!(load_vectors(&p, &crate::graph::test_graphs::chain(6), 256).is_err());
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 1]).unwrap();
        assert!(load_vectors(&p, &g, 256).is_err());
    }
}
