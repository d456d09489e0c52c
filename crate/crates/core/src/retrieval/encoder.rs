use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bm25::{bm25_top_k, Bm25Index};
use super::claims::Claim;
use crate::embed::{embed_target_sentence, EmbedderConfig};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::policy::{
    backprop_input, edge_features, score_input, state_input, AdamW, NavContext, PolicyParams,
};
use crate::rng::{rng_from, stream};

/// Linear map applied to the sentence embedding of a claim; together they
/// form the claim's goal vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetEncoderParams {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub m: Vec<f64>,
}

impl TargetEncoderParams {
    pub fn identity(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        TargetEncoderParams { dim, m }
    }

    pub fn check(&self) -> Result<()> {
        if self.m.len() != self.dim * self.dim || self.m.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "target encoder must be a finite dim x dim matrix",
            ));
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.m
            .chunks_exact(self.dim)
            .map(|row| crate::embed::dot(row, v))
            .collect()
    }

    /// Goal vector for a claim or question.
    pub fn encode(&self, embedder: &EmbedderConfig, text: &str) -> Result<Vec<f64>> {
        if embedder.dim != self.dim {
            return Err(Error::invalid(
                "target encoder and embedder dimensions differ",
            ));
        }
        Ok(self.apply(&embed_target_sentence(embedder, text)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        p.check()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Weight of `||phi_target(claim) - phi(gold)||_2` next to the BC loss.
    pub aux_weight: f64,
    /// BM25 hits used as demonstration starts.
    pub k_start: usize,
    /// Longest demonstration path followed.
    pub max_path: u32,
    pub seed: u64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            steps: 1000,
            batch: 64,
            lr: 1e-3,
            weight_decay: 0.0,
            aux_weight: 0.1,
            k_start: 10,
            max_path: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FinetuneReport {
    /// Claims that gave no transition: no tokens, no gold node, or no path
    /// of at least one move from a start to a gold node.
    pub skipped: usize,
    pub transitions: usize,
    /// Mean loss per step.
    pub losses: Vec<f64>,
}

struct Transition {
    claim: usize,
    gold: NodeId,
    state: Vec<f64>,
    actions: Vec<Vec<f64>>,
    next: usize,
}

/// Demonstrations: shortest paths from each claim's BM25 starts to its gold
/// nodes, cut into single transitions.
fn demonstrations(
    claims: &[Claim],
    ctx: &NavContext,
    index: &Bm25Index,
    cfg: &FinetuneConfig,
) -> Result<(Vec<Vec<f64>>, Vec<Transition>, usize)> {
    let g = ctx.graph;
    let mut inputs = Vec::with_capacity(claims.len());
    let mut out = Vec::new();
    let mut skipped = 0;
    for (ci, c) in claims.iter().enumerate() {
        let input = match embed_target_sentence(ctx.target_encoder, &c.text) {
            Ok(v) => v,
            Err(Error::NoTokens) => Vec::new(),
            Err(e) => return Err(e),
        };
        let before = out.len();
        if !input.is_empty() {
            for (start, _) in bm25_top_k(index, &c.text, cfg.k_start)? {
                for &gold in &c.gold_nodes {
                    let Some(path) = g.shortest_path(start, gold, cfg.max_path)? else {
                        continue;
                    };
                    for i in 0..path.len() - 1 {
                        let edges = g.out(path[i]);
                        out.push(Transition {
                            claim: ci,
                            gold,
                            state: ctx.table.get(path[i]).to_vec(),
                            actions: edge_features(ctx.table, edges, &path[..=i]),
                            next: edges.iter().position(|e| e.target == path[i + 1]).unwrap(),
                        });
                    }
                }
            }
        }
        if out.len() == before {
            skipped += 1;
        }
        inputs.push(input);
    }
    Ok((inputs, out, skipped))
}

/// Trains the target encoder with the policy and node vectors frozen. The
/// loss per transition is the policy's negative log-likelihood of the
/// demonstrated move, with the encoded claim as goal, plus `aux_weight`
/// times the distance between the encoded claim and the gold node's vector.
pub fn finetune_target_encoder(
    init: &TargetEncoderParams,
    claims: &[Claim],
    policy: &PolicyParams,
    ctx: &NavContext,
    index: &Bm25Index,
    cfg: &FinetuneConfig,
) -> Result<(TargetEncoderParams, FinetuneReport)> {
    init.check()?;
    policy.check()?;
    let d = init.dim;
    if policy.dim != d || ctx.table.dim() != d {
        return Err(Error::invalid(
            "target encoder, policy and embeddings must share a dimension",
        ));
    }
    if cfg.batch == 0 || !(cfg.lr > 0.0) {
        return Err(Error::invalid(
            "finetuning needs a positive batch and learning rate",
        ));
    }
    let (inputs, demos, skipped) = demonstrations(claims, ctx, index, cfg)?;
    let mut report = FinetuneReport {
        skipped,
        transitions: demos.len(),
        losses: Vec::new(),
    };
    let mut params = init.clone();
    if demos.is_empty() || cfg.steps == 0 {
        return Ok((params, report));
    }
    let mut opt = AdamW::new(d * d, cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay);
    for step in 0..cfg.steps {
        let picks: Vec<usize> = (0..cfg.batch)
            .map(|i| {
                rng_from(cfg.seed, &[stream::FINETUNE, step as u64, i as u64])
                    .random_range(0..demos.len())
            })
            .collect();
        let parts: Vec<(f64, Vec<f64>)> = picks
            .par_iter()
            .map(|&k| -> Result<(f64, Vec<f64>)> {
                let t = &demos[k];
                let c = &inputs[t.claim];
                let goal = params.apply(c);
                let s = score_input(policy, state_input(&t.state, &goal), &t.actions)?;
                let mut loss = -s.probs[t.next].max(f64::MIN_POSITIVE).ln();
                let dl: Vec<f64> = s
                    .probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p - if i == t.next { 1.0 } else { 0.0 })
                    .collect();
                let mut dgoal = backprop_input(policy, &s, &dl)[d..].to_vec();
                let diff: Vec<f64> = goal
                    .iter()
                    .zip(ctx.table.get(t.gold))
                    .map(|(a, b)| a - b)
                    .collect();
                let dist = crate::embed::norm(&diff);
                loss += cfg.aux_weight * dist;
                if dist > 0.0 {
                    for (g, x) in dgoal.iter_mut().zip(&diff) {
                        *g += cfg.aux_weight * x / dist;
                    }
                }
                let mut grad = vec![0.0; d * d];
                for (row, gi) in grad.chunks_exact_mut(d).zip(&dgoal) {
                    for (r, cj) in row.iter_mut().zip(c) {
                        *r = gi * cj;
                    }
                }
                Ok((loss, grad))
            })
            .collect::<Result<_>>()?;
        let n = parts.len() as f64;
        let mut grad = vec![0.0; d * d];
        let mut loss = 0.0;
        for (l, g) in parts {
            loss += l / n;
            for (a, b) in grad.iter_mut().zip(g) {
                *a += b / n;
            }
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        opt.step(&mut params.m, &grad);
        report.losses.push(loss);
    }
    Ok((params, report))
}
