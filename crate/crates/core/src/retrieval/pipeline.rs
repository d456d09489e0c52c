use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bm25::{bm25_top_k, Bm25Index};
use super::claims::Claim;
use super::encoder::TargetEncoderParams;
use super::fuzzy::{token_set_ratio, MATCH_THRESHOLD};
use super::tfidf::tfidf_rank;
use crate::agents::policy_walk;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::policy::{NavContext, PolicyParams};
use crate::text::split_sentences;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k_start: usize,
    pub nav_steps: usize,
    pub k_out: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_start: 5,
            nav_steps: 20,
            k_out: 5,
        }
    }
}

/// A retrieved sentence with the walk that first reached its node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub sentence: String,
    pub score: f64,
    pub node: NodeId,
    pub path: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Retrieved {
    pub evidence: Vec<Evidence>,
    /// Distinct nodes visited over all walks.
    pub visited: usize,
}

/// BM25 starts, a policy walk from each toward the encoded claim, then
/// TF-IDF re-ranking of every distinct sentence on the visited nodes.
pub fn evidence_pipeline(
    claim: &str,
    index: &Bm25Index,
    policy: &PolicyParams,
    encoder: &TargetEncoderParams,
    ctx: &NavContext,
    cfg: &PipelineConfig,
) -> Result<Retrieved> {
    if cfg.k_start == 0 || cfg.k_out == 0 {
        return Err(Error::invalid("k_start and k_out must be at least 1"));
    }
    let starts = match bm25_top_k(index, claim, cfg.k_start) {
        Ok(s) if !s.is_empty() => s,
        Ok(_) | Err(Error::NoTokens) => return Err(Error::NoStartNodes),
        Err(e) => return Err(e),
    };
    let goal = if cfg.nav_steps > 0 {
        encoder.encode(ctx.target_encoder, claim)?
    } else {
        Vec::new()
    };
    let mut seen_nodes = HashSet::new();
    let mut seen_sentences = HashSet::new();
    let mut pool: Vec<(String, NodeId, Vec<NodeId>)> = Vec::new();
    for (start, _) in starts {
        let walk = if cfg.nav_steps > 0 {
            policy_walk(ctx, policy, start, &goal, cfg.nav_steps)?
        } else {
            vec![start]
        };
        for (i, &n) in walk.iter().enumerate() {
            if !seen_nodes.insert(n) {
                continue;
            }
            for s in split_sentences(&ctx.graph.node(n)?.text) {
                if seen_sentences.insert(s.clone()) {
                    pool.push((s, n, walk[..=i].to_vec()));
                }
            }
        }
    }
    let sentences: Vec<&str> = pool.iter().map(|p| p.0.as_str()).collect();
    let evidence = tfidf_rank(index, claim, &sentences)
        .into_iter()
        .take(cfg.k_out)
        .map(|(i, score)| Evidence {
            sentence: pool[i].0.clone(),
            score,
            node: pool[i].1,
            path: pool[i].2.clone(),
        })
        .collect();
    Ok(Retrieved {
        evidence,
        visited: seen_nodes.len(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of the first `k` predictions. A prediction is
/// correct when it matches some gold sentence (token set ratio of at least
/// 80); recall counts gold sentences matched by at least one prediction.
pub fn prf1_at_k<P: AsRef<str>, G: AsRef<str>>(
    predicted: &[P],
    gold: &[G],
    k: usize,
) -> Result<Prf1> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if gold.is_empty() {
        return Err(Error::invalid("claim has no gold sentences"));
    }
    let top = &predicted[..k.min(predicted.len())];
    let matches = |p: &P, g: &G| token_set_ratio(p.as_ref(), g.as_ref()) >= MATCH_THRESHOLD;
    let correct = top
        .iter()
        .filter(|p| gold.iter().any(|g| matches(p, g)))
        .count();
    let found = gold
        .iter()
        .filter(|g| top.iter().any(|p| matches(p, g)))
        .count();
    let precision = if top.is_empty() {
        0.0
    } else {
        correct as f64 / top.len() as f64
    };
    let recall = found as f64 / gold.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf1 {
        precision,
        recall,
        f1,
    })
}

/// Share of gold nodes among the nodes of the first `k` predictions.
pub fn node_recall_at_k(predicted: &[NodeId], gold: &[NodeId], k: usize) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::invalid("claim has no gold nodes"));
    }
    let top = &predicted[..k.min(predicted.len())];
    Ok(gold.iter().filter(|g| top.contains(g)).count() as f64 / gold.len() as f64)
}

/// Pipeline output and scores for one claim. Scores are absent when the
/// claim has no gold sentences.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimResult {
    pub id: String,
    pub evidence: Vec<Evidence>,
    pub visited: usize,
    pub prf1: Option<Prf1>,
    /// Sentence recall at k = 1..=k_out.
    pub recall_at: Vec<f64>,
}

/// Runs the pipeline over every claim in parallel; results keep claim order.
pub fn run_claims(
    claims: &[Claim],
    index: &Bm25Index,
    policy: &PolicyParams,
    encoder: &TargetEncoderParams,
    ctx: &NavContext,
    cfg: &PipelineConfig,
) -> Result<Vec<ClaimResult>> {
    claims
        .par_iter()
        .map(|c| {
            let r = evidence_pipeline(&c.text, index, policy, encoder, ctx, cfg)?;
            let predicted: Vec<&str> = r.evidence.iter().map(|e| e.sentence.as_str()).collect();
            let (prf1, recall_at) = if c.gold_sentences.is_empty() {
                (None, Vec::new())
            } else {
                let at = (1..=cfg.k_out)
                    .map(|k| prf1_at_k(&predicted, &c.gold_sentences, k).map(|m| m.recall))
                    .collect::<Result<_>>()?;
                (
                    Some(prf1_at_k(&predicted, &c.gold_sentences, cfg.k_out)?),
                    at,
                )
            };
            Ok(ClaimResult {
                id: c.id.clone(),
                evidence: r.evidence,
                visited: r.visited,
                prf1,
                recall_at,
            })
        })
        .collect()
}

/// Mean of each metric over the scored claims: `(P, R, F1, recall@1..k)`.
pub fn mean_metrics(results: &[ClaimResult]) -> (Prf1, Vec<f64>) {
    let scored: Vec<&ClaimResult> = results.iter().filter(|r| r.prf1.is_some()).collect();
    let n = scored.len().max(1) as f64;
    let mut m = Prf1::default();
    let k = scored.iter().map(|r| r.recall_at.len()).max().unwrap_or(0);
    let mut at = vec![0.0; k];
    for r in &scored {
        let p = r.prf1.unwrap();
        m.precision += p.precision / n;
        m.recall += p.recall / n;
        m.f1 += p.f1 / n;
        for (a, v) in at.iter_mut().zip(&r.recall_at) {
            *a += v / n;
        }
    }
    (m, at)
}
