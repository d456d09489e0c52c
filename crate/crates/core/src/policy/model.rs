use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{dot, embed_target_sentence, EmbedderConfig, EmbeddingTable};
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeType, Graph, NodeId};
use crate::rng::{rng_from, stream};
use crate::text::split_sentences;

/// Extra action features after the node embedding: four edge-type slots and
/// the visited bit.
pub const ACTION_EXTRA: usize = 5;

/// Parameters of the scorer and, optionally, a linear value head.
///
/// Flat layout: `W` (`(d+5) x 2d`, row-major), bias `b` (`d+5`), then when
/// present the value weights `v` (`2d`) and value bias `c` (1).
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub dim: usize,
    /// Multiplier on the cosine logits.
    pub logit_scale: f64,
    pub value_head: bool,
    pub data: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(dim: usize, logit_scale: f64, value_head: bool) -> Self {
        let mut p = PolicyParams {
            dim,
            logit_scale,
            value_head,
            data: Vec::new(),
        };
        p.data = vec![0.0; p.expected_len()];
        p
    }

    /// `W` entries from N(0, 1/(2d)); biases and value head start at zero.
    pub fn init(dim: usize, logit_scale: f64, value_head: bool, seed: u64) -> Self {
        let mut p = Self::zeros(dim, logit_scale, value_head);
        let mut rng = rng_from(seed, &[stream::INIT]);
        let normal = Normal::new(0.0, (1.0 / (2.0 * dim as f64)).sqrt()).unwrap();
        let n = p.rows() * p.cols();
        for w in &mut p.data[..n] {
            *w = normal.sample(&mut rng);
        }
        p
    }

    pub fn rows(&self) -> usize {
        self.dim + ACTION_EXTRA
    }

    pub fn cols(&self) -> usize {
        2 * self.dim
    }

    fn expected_len(&self) -> usize {
        let scorer = self.rows() * self.cols() + self.rows();
        if self.value_head {
            scorer + self.cols() + 1
        } else {
            scorer
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.data.len() != self.expected_len() {
            return Err(Error::invalid(format!(
                "parameter vector has {} entries, expected {}",
                self.data.len(),
                self.expected_len()
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(())
    }

    pub fn w(&self) -> &[f64] {
        &self.data[..self.rows() * self.cols()]
    }

    pub fn b(&self) -> &[f64] {
        let o = self.rows() * self.cols();
        &self.data[o..o + self.rows()]
    }

    fn value_offset(&self) -> usize {
        self.rows() * self.cols() + self.rows()
    }

    /// Adds a zeroed value head if absent.
    pub fn with_value_head(mut self) -> Self {
        if !self.value_head {
            self.value_head = true;
            self.data.resize(self.expected_len(), 0.0);
        }
        self
    }

    /// Drops the value head.
    pub fn without_value_head(mut self) -> Self {
        self.value_head = false;
        self.data.truncate(self.expected_len());
        self
    }

    /// Baseline estimate for `x = [s_t | s_g]`.
    pub fn value(&self, x: &[f64]) -> f64 {
        if !self.value_head {
            return 0.0;
        }
        let o = self.value_offset();
        dot(&self.data[o..o + self.cols()], x) + self.data[o + self.cols()]
    }

    /// `e_tg = W [s_t | s_g] + b`.
    pub fn combined(&self, x: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        self.w()
            .chunks_exact(cols)
            .zip(self.b())
            .map(|(row, b)| dot(row, x) + b)
            .collect()
    }
}

/// Concatenation `[s_t | s_g]`.
pub fn state_input(s_t: &[f64], s_g: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(s_t.len() + s_g.len());
    x.extend_from_slice(s_t);
    x.extend_from_slice(s_g);
    x
}

/// `[phi(candidate) | one-hot edge type | visited]`.
pub fn action_features(phi: &[f64], kind: EdgeType, visited: bool) -> Vec<f64> {
    let mut a = Vec::with_capacity(phi.len() + ACTION_EXTRA);
    a.extend_from_slice(phi);
    let mut onehot = [0.0; 4];
    onehot[kind.index()] = 1.0;
    a.extend_from_slice(&onehot);
    a.push(if visited { 1.0 } else { 0.0 });
    a
}

/// Features for each edge in `edges`, with the visited bit set for targets
/// in `path`.
pub fn edge_features(table: &EmbeddingTable, edges: &[Edge], path: &[NodeId]) -> Vec<Vec<f64>> {
    edges
        .iter()
        .map(|e| action_features(table.get(e.target), e.kind, path.contains(&e.target)))
        .collect()
}

fn unit(v: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = dot(v, v).sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok((v.iter().map(|x| x / n).collect(), n))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / s).collect()
}

/// Intermediate values of one scoring pass, kept for the backward pass.
#[derive(Clone, Debug)]
pub struct Scored {
    pub x: Vec<f64>,
    e_hat: Vec<f64>,
    e_norm: f64,
    a_hat: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Scores a prepared state input against raw action features.
pub fn score_input(params: &PolicyParams, x: Vec<f64>, actions: &[Vec<f64>]) -> Result<Scored> {
    if actions.is_empty() {
        return Err(Error::invalid("no actions to score"));
    }
    let e = params.combined(&x);
    let e_norm = dot(&e, &e).sqrt().max(1e-12);
    let e_hat: Vec<f64> = e.iter().map(|v| v / e_norm).collect();
    let a_hat = actions
        .iter()
        .map(|a| {
            if a.len() != params.rows() {
                return Err(Error::invalid(format!(
                    "action has {} features, expected {}",
                    a.len(),
                    params.rows()
                )));
            }
            unit(a).map(|(u, _)| u)
        })
        .collect::<Result<Vec<_>>>()?;
    let logits: Vec<f64> = a_hat
        .iter()
        .map(|a| params.logit_scale * dot(&e_hat, a))
        .collect();
    let probs = softmax(&logits);
    Ok(Scored {
        x,
        e_hat,
        e_norm,
        a_hat,
        logits,
        probs,
    })
}

/// Probability of each action: softmax over `scale * cos(e_tg, a_i)`.
pub fn score_actions(
    params: &PolicyParams,
    s_t: &[f64],
    s_g: &[f64],
    actions: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if s_t.len() != params.dim || s_g.len() != params.dim {
        return Err(Error::invalid(
            "state and goal must match the policy dimension",
        ));
    }
    Ok(score_input(params, state_input(s_t, s_g), actions)?.probs)
}

/// `d loss / d e_tg` given `d loss / d logits`.
fn combined_grad(params: &PolicyParams, s: &Scored, dlogits: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; params.rows()];
    for (g, a) in dlogits.iter().zip(&s.a_hat) {
        let k = params.logit_scale * g;
        for (ui, ai) in u.iter_mut().zip(a) {
            *ui += k * ai;
        }
    }
    // through e_hat = e / |e|
    let proj = dot(&s.e_hat, &u);
    u.iter()
        .zip(&s.e_hat)
        .map(|(ui, ei)| (ui - ei * proj) / s.e_norm)
        .collect()
}

/// `d loss / d x` for the state input `x = [s_t | s_g]`, given
/// `d loss / d logits`.
pub fn backprop_input(params: &PolicyParams, s: &Scored, dlogits: &[f64]) -> Vec<f64> {
    let delta = combined_grad(params, s, dlogits);
    let mut dx = vec![0.0; params.cols()];
    for (row, &d) in params.w().chunks_exact(params.cols()).zip(&delta) {
        for (g, w) in dx.iter_mut().zip(row) {
            *g += d * w;
        }
    }
    dx
}

/// Accumulates `d loss / d params` for the scorer into `grad`, given
/// `d loss / d logits`.
pub fn backprop(params: &PolicyParams, s: &Scored, dlogits: &[f64], grad: &mut [f64]) {
    let rows = params.rows();
    let cols = params.cols();
    let delta = combined_grad(params, s, dlogits);
    let (gw, rest) = grad.split_at_mut(rows * cols);
    for (row, &d) in gw.chunks_exact_mut(cols).zip(&delta) {
        if d != 0.0 {
            for (w, xi) in row.iter_mut().zip(&s.x) {
                *w += d * xi;
            }
        }
    }
    for (gb, d) in rest[..rows].iter_mut().zip(&delta) {
        *gb += d;
    }
}

/// Accumulates the value-head gradient of `scale * 0.5 * (v(x) - ret)^2`.
pub fn backprop_value(params: &PolicyParams, x: &[f64], ret: f64, scale: f64, grad: &mut [f64]) {
    let o = params.value_offset();
    let err = scale * (params.value(x) - ret);
    for (g, xi) in grad[o..o + params.cols()].iter_mut().zip(x) {
        *g += err * xi;
    }
    grad[o + params.cols()] += err;
}

/// One supervised example: scoring inputs and the index of the demonstrated
/// action.
#[derive(Clone, Debug)]
pub struct Example {
    pub state: Vec<f64>,
    pub goal: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
    pub gold: usize,
}

/// Examples per gradient partial. Fixed so that the summation order, and
/// therefore the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 8;

/// Mean negative log-likelihood of the gold actions and its exact gradient.
pub fn bc_loss_and_grad(params: &PolicyParams, batch: &[Example]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for ex in batch {
        if ex.gold >= ex.actions.len() {
            return Err(Error::invalid(format!(
                "gold index {} out of range for {} actions",
                ex.gold,
                ex.actions.len()
            )));
        }
    }
    let n = batch.len() as f64;
    let partials: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| -> Result<(f64, Vec<f64>)> {
            let mut grad = vec![0.0; params.data.len()];
            let mut loss = 0.0;
            for ex in chunk {
                let s = score_input(params, state_input(&ex.state, &ex.goal), &ex.actions)?;
                loss -= s.probs[ex.gold].max(f64::MIN_POSITIVE).ln();
                let dlogits: Vec<f64> = s
                    .probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p - if i == ex.gold { 1.0 } else { 0.0 }) / n)
                    .collect();
                backprop(params, &s, &dlogits, &mut grad);
            }
            Ok((loss, grad))
        })
        .collect::<Result<_>>()?;
    Ok(sum_partials(params.data.len(), partials, n))
}

pub(crate) fn sum_partials(len: usize, partials: Vec<(f64, Vec<f64>)>, n: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; len];
    let mut loss = 0.0;
    for (l, g) in partials {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    (loss / n, grad)
}

/// Index of the highest-probability action; ties go to the lowest target id.
pub fn argmax_action(probs: &[f64], edges: &[Edge]) -> usize {
    let mut best = 0;
    for i in 1..probs.len() {
        if probs[i] > probs[best]
            || (probs[i] == probs[best] && edges[i].target < edges[best].target)
        {
            best = i;
        }
    }
    best
}

/// Navigation inputs shared by training and evaluation.
#[derive(Clone, Copy, Debug)]
pub struct NavContext<'a> {
    pub graph: &'a Graph,
    /// Node embeddings used for states and actions.
    pub table: &'a EmbeddingTable,
    /// Encoder for sentence goals.
    pub target_encoder: &'a EmbedderConfig,
}

/// How the goal of a navigation task is presented to the agent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalMode {
    /// The target node's own embedding.
    #[default]
    Node,
    /// The embedding of one sentence of the target node, chosen uniformly.
    Sentence,
}

impl<'a> NavContext<'a> {
    pub fn new(
        graph: &'a Graph,
        table: &'a EmbeddingTable,
        target_encoder: &'a EmbedderConfig,
    ) -> Self {
        NavContext {
            graph,
            table,
            target_encoder,
        }
    }

    /// Goal vector for `target`. Sentence goals consume randomness; node
    /// goals do not.
    pub fn goal(&self, target: NodeId, mode: GoalMode, rng: &mut impl Rng) -> Result<Vec<f64>> {
        match mode {
            GoalMode::Node => {
                self.graph.check(target)?;
                Ok(self.table.get(target).to_vec())
            }
            GoalMode::Sentence => {
                let text = &self.graph.node(target)?.text;
                let sentences = split_sentences(text);
                let s = sentences.choose(rng).map(String::as_str).unwrap_or(text);
                match embed_target_sentence(self.target_encoder, s) {
                    Err(Error::NoTokens) => {
                        embed_target_sentence(self.target_encoder, &self.graph.node(target)?.title)
                    }
                    r => r,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    fn rand_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn instance(rng: &mut impl Rng, dim: usize) -> (PolicyParams, Vec<Example>) {
        let mut p = PolicyParams::init(dim, 3.0, false, rng.random());
        for v in p.data.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
        let batch = (0..3)
            .map(|_| {
                let k = rng.random_range(2..6);
                let actions = (0..k).map(|_| rand_vec(rng, dim + ACTION_EXTRA)).collect();
                Example {
                    state: rand_vec(rng, dim),
                    goal: rand_vec(rng, dim),
                    actions,
                    gold: rng.random_range(0..k),
                }
            })
            .collect();
        (p, batch)
    }

    #[test]
    fn identical_actions_give_uniform() {
        let p = PolicyParams::init(8, 5.0, false, 1);
        let a = vec![vec![0.3; 13]; 4];
        let probs = score_actions(&p, &[0.1; 8], &[0.2; 8], &a).unwrap();
        for q in probs {
            assert!((q - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_softmax() {
        let p = softmax(&[0.0, 3f64.ln()]);
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn zero_action_is_an_error() {
        let p = PolicyParams::init(8, 5.0, false, 1);
        let r = score_actions(&p, &[0.1; 8], &[0.2; 8], &[vec![0.0; 13]]);
        assert!(matches!(r, Err(Error::ZeroVector)));
    }

    #[test]
    fn uniform_scorer_loss_is_ln_k() {
        let p = PolicyParams::zeros(8, 5.0, false);
        let ex = Example {
            state: vec![0.5; 8],
            goal: vec![0.5; 8],
            actions: (0..5)
                .map(|i| action_features(&[i as f64 + 1.0; 8], EdgeType::Next, false))
                .collect(),
            gold: 2,
        };
        let (loss, _) = bc_loss_and_grad(&p, std::slice::from_ref(&ex)).unwrap();
        assert!((loss - 5f64.ln()).abs() < 1e-12);
        let (dup, _) = bc_loss_and_grad(&p, &[ex.clone(), ex]).unwrap();
        assert!((dup - loss).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_from(42, &[]);
        for _ in 0..10 {
            let (p, batch) = instance(&mut rng, 8);
            let (_, grad) = bc_loss_and_grad(&p, &batch).unwrap();
            let h = 1e-6;
            for i in 0..p.data.len() {
                let mut plus = p.clone();
                plus.data[i] += h;
                let mut minus = p.clone();
                minus.data[i] -= h;
                let fd = (bc_loss_and_grad(&plus, &batch).unwrap().0
                    - bc_loss_and_grad(&minus, &batch).unwrap().0)
                    / (2.0 * h);
                let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-4);
                assert!(err <= 1e-4, "param {i}: fd {fd} analytic {}", grad[i]);
            }
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = rng_from(8, &[]);
        let (p, batch) = instance(&mut rng, 8);
        let ex = &batch[0];
        let nll =
            |x: &[f64]| -score_input(&p, x.to_vec(), &ex.actions).unwrap().probs[ex.gold].ln();
        let x = state_input(&ex.state, &ex.goal);
        let s = score_input(&p, x.clone(), &ex.actions).unwrap();
        let dl: Vec<f64> = s
            .probs
            .iter()
            .enumerate()
            .map(|(i, q)| q - if i == ex.gold { 1.0 } else { 0.0 })
            .collect();
        let dx = backprop_input(&p, &s, &dl);
        for i in 0..x.len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (nll(&a) - nll(&b)) / 2e-6;
            assert!(
                (fd - dx[i]).abs() <= 1e-6 * fd.abs().max(1.0),
                "{i}: {fd} vs {}",
                dx[i]
            );
        }
    }

    #[test]
    fn value_gradient_matches_finite_differences() {
        let mut rng = rng_from(3, &[]);
        let mut p = PolicyParams::init(8, 3.0, true, 9);
        for v in p.data.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
        let x = rand_vec(&mut rng, 16);
        let loss = |p: &PolicyParams| 0.25 * (p.value(&x) - 0.7).powi(2);
        let mut grad = vec![0.0; p.data.len()];
        backprop_value(&p, &x, 0.7, 0.5, &mut grad);
        let o = p.value_offset();
        for i in o..p.data.len() {
            let mut a = p.clone();
            a.data[i] += 1e-6;
            let mut b = p.clone();
            b.data[i] -= 1e-6;
            let fd = (loss(&a) - loss(&b)) / 2e-6;
            assert!((fd - grad[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn scaling_an_action_does_not_change_probs() {
        let mut rng = rng_from(5, &[]);
        let (p, batch) = instance(&mut rng, 8);
        let ex = &batch[0];
        let before = score_actions(&p, &ex.state, &ex.goal, &ex.actions).unwrap();
        let mut scaled = ex.actions.clone();
        scaled[0].iter_mut().for_each(|v| *v *= 7.0);
        let after = score_actions(&p, &ex.state, &ex.goal, &scaled).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn permuting_actions_permutes_probs() {
        let mut rng = rng_from(6, &[]);
        let (p, batch) = instance(&mut rng, 8);
        let ex = &batch[1];
        let probs = score_actions(&p, &ex.state, &ex.goal, &ex.actions).unwrap();
        let mut rev = ex.actions.clone();
        rev.reverse();
        let mut back = score_actions(&p, &ex.state, &ex.goal, &rev).unwrap();
        back.reverse();
        for (a, b) in probs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_ties_prefer_lower_ids() {
        let edges = [
            Edge {
                kind: EdgeType::Hyperlink,
                target: NodeId(9),
            },
            Edge {
                kind: EdgeType::Hyperlink,
                target: NodeId(2),
            },
            Edge {
                kind: EdgeType::Hyperlink,
                target: NodeId(5),
            },
        ];
        assert_eq!(argmax_action(&[0.4, 0.4, 0.2], &edges), 1);
        assert_eq!(argmax_action(&[0.2, 0.3, 0.5], &edges), 2);
    }
}
