use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{
    backprop, backprop_value, edge_features, score_input, state_input, NavContext, PolicyParams,
};
use super::optim::RmsProp;
use super::train::{LogRow, TrainLog};
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};
use crate::trajectories::sample_forward;

/// REINFORCE with a learned linear baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlConfig {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    pub gamma: f64,
    pub entropy: f64,
    pub baseline_cost: f64,
    /// Total environment steps (moves) to collect.
    pub env_steps: usize,
    pub episodes_per_update: usize,
    /// Task length T; targets are ends of T-step forward walks.
    pub task_steps: usize,
    /// Step budget B per episode.
    pub budget: usize,
    pub logit_scale: f64,
    pub seed: u64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            lr: 0.01,
            decay: 0.9,
            eps: 1e-10,
            gamma: 0.9,
            entropy: 0.01,
            baseline_cost: 0.5,
            env_steps: 20_000 * 64,
            episodes_per_update: 32,
            task_steps: 5,
            budget: 50,
            logit_scale: 10.0,
            seed: 0,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0)
            || self.episodes_per_update == 0
            || self.budget == 0
            || self.task_steps == 0
        {
            return Err(Error::invalid("RL settings must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Discounted returns for an episode of `moves` steps: reward 1 on the move
/// that reaches the target, so step `t` gets `gamma^(moves - 1 - t)` on
/// success and 0 otherwise.
pub fn discounted_returns(moves: usize, success: bool, gamma: f64) -> Vec<f64> {
    (0..moves)
        .map(|t| {
            if success {
                gamma.powi((moves - 1 - t) as i32)
            } else {
                0.0
            }
        })
        .collect()
}

struct Rollout {
    steps: usize,
    success: bool,
    grad: Vec<f64>,
    loss: f64,
}

/// One sampled episode and its unnormalized loss gradient.
fn rollout(
    ctx: &NavContext,
    params: &PolicyParams,
    cfg: &RlConfig,
    rng: &mut impl Rng,
) -> Result<Rollout> {
    let g = ctx.graph;
    let walk = sample_forward(g, cfg.task_steps, rng)?;
    let target = walk.target();
    let goal = ctx.table.get(target);
    let mut cur = walk.start();
    let mut path = vec![cur];
    let mut record = Vec::new();
    while cur != target && record.len() < cfg.budget {
        let edges = g.out(cur);
        if edges.is_empty() {
            break;
        }
        let actions = edge_features(ctx.table, edges, &path);
        let s = score_input(params, state_input(ctx.table.get(cur), goal), &actions)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut a = s.probs.len() - 1;
        for (i, p) in s.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                a = i;
                break;
            }
        }
        cur = edges[a].target;
        path.push(cur);
        record.push((s, a));
    }
    let success = cur == target;
    let returns = discounted_returns(record.len(), success, cfg.gamma);
    let mut grad = vec![0.0; params.data.len()];
    let mut loss = 0.0;
    for ((s, a), ret) in record.iter().zip(&returns) {
        let v = params.value(&s.x);
        let adv = ret - v;
        let h: f64 = -s.probs.iter().map(|p| p * p.max(1e-300).ln()).sum::<f64>();
        loss += -adv * s.probs[*a].max(1e-300).ln() - cfg.entropy * h
            + cfg.baseline_cost * 0.5 * (ret - v).powi(2);
        let dlogits: Vec<f64> = s
            .probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let pg = adv * (p - if i == *a { 1.0 } else { 0.0 });
                pg + cfg.entropy * p * (p.max(1e-300).ln() + h)
            })
            .collect();
        backprop(params, s, &dlogits, &mut grad);
        backprop_value(params, &s.x, *ret, cfg.baseline_cost, &mut grad);
    }
    Ok(Rollout {
        steps: record.len(),
        success,
        grad,
        loss,
    })
}

/// Policy-gradient training on T-step navigation with reward 1 on reaching
/// the target. With `init`, finetunes those parameters (a value head is
/// added if missing). The log has one row per update: mean loss per move and
/// the batch success rate as the probe column.
pub fn reinforce_train(
    ctx: &NavContext,
    cfg: &RlConfig,
    init: Option<PolicyParams>,
) -> Result<(PolicyParams, TrainLog)> {
    cfg.validate()?;
    let mut params = match init {
        Some(p) => {
            p.check()?;
            if p.dim != ctx.table.dim() {
                return Err(Error::invalid(
                    "initial policy dimension does not match the embeddings",
                ));
            }
            p.with_value_head()
        }
        None => PolicyParams::init(ctx.table.dim(), cfg.logit_scale, true, cfg.seed),
    };
    let mut opt = RmsProp::new(params.data.len(), cfg.lr, cfg.decay, cfg.eps);
    let mut log = TrainLog::default();
    let mut used = 0;
    let mut update = 0;
    while used < cfg.env_steps {
        let rollouts: Vec<Rollout> = (0..cfg.episodes_per_update)
            .into_par_iter()
            .map(|e| {
                let mut rng = rng_from(cfg.seed, &[stream::RL_EPISODE, update as u64, e as u64]);
                rollout(ctx, &params, cfg, &mut rng)
            })
            .collect::<Result<_>>()?;
        let moves: usize = rollouts.iter().map(|r| r.steps).sum();
        let successes = rollouts.iter().filter(|r| r.success).count();
        used += moves.max(1);
        if moves > 0 {
            let n = moves as f64;
            let mut grad = vec![0.0; params.data.len()];
            let mut loss = 0.0;
            for r in &rollouts {
                loss += r.loss;
                for (a, b) in grad.iter_mut().zip(&r.grad) {
                    *a += b / n;
                }
            }
            loss /= n;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { step: update, loss });
            }
            opt.step(&mut params.data, &grad);
            log.rows.push(LogRow {
                step: update,
                loss,
                probe: Some(successes as f64 / rollouts.len() as f64),
            });
        }
        update += 1;
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{evaluate, AgentKind, TaskKind, TaskSpec};
    use crate::embed::{embed_graph, EmbedderConfig};
    use crate::graph::{EdgeType, GraphBuilder, NodeId};

    #[test]
    fn returns_are_discounted_from_the_final_move() {
        assert_eq!(discounted_returns(3, true, 0.5), vec![0.25, 0.5, 1.0]);
        assert_eq!(discounted_returns(3, false, 0.5), vec![0.0; 3]);
    }

    #[test]
    fn learns_a_three_node_chain() {
        let mut b = GraphBuilder::new();
        for i in 0..3 {
            b.add_node(
                0,
                "c",
                i,
                ["alpha beta", "gamma delta", "epsilon zeta"][i as usize],
            );
        }
        for i in 0..2u32 {
            b.add_edge(NodeId(i), EdgeType::Next, NodeId(i + 1))
                .unwrap();
            b.add_edge(NodeId(i + 1), EdgeType::Prev, NodeId(i))
                .unwrap();
        }
        let g = b.build();
        let ecfg = EmbedderConfig::hashed(16, 0);
        let table = embed_graph(&ecfg, &g).unwrap();
        let ctx = NavContext::new(&g, &table, &ecfg);
        let cfg = RlConfig {
            env_steps: 20_000,
            episodes_per_update: 16,
            task_steps: 2,
            budget: 4,
            ..RlConfig::default()
        };
        let (p, log) = reinforce_train(&ctx, &cfg, None).unwrap();
        assert!(!log.rows.is_empty());
        let task = TaskSpec::new(TaskKind::NavT(2), 4, 300, 1);
        let e = evaluate(&task, &AgentKind::Policy(&p), &ctx).unwrap();
        assert!(e.success_rate > 0.95, "{}", e.success_rate);
    }
}
