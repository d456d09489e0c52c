use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{bc_loss_and_grad, edge_features, Example, GoalMode, NavContext, PolicyParams};
use super::optim::RmsProp;
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};
use crate::trajectories::{mask_edges, DistanceCache, Sampler, SamplerKind, SamplerStats};

/// Behavioral-cloning settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
    pub batch: usize,
    pub steps: usize,
    pub sampler: SamplerKind,
    /// Trajectory length T.
    pub traj_steps: usize,
    /// Draw each trajectory's length from `1..=traj_steps`.
    pub multistep: bool,
    pub edge_dropout: f64,
    pub logit_scale: f64,
    pub goal: GoalMode,
    pub seed: u64,
    /// Run the success probe every this many steps (0 disables it).
    pub probe_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::desk()
    }
}

impl TrainConfig {
    /// Laptop-scale defaults.
    pub fn desk() -> Self {
        TrainConfig {
            lr: 0.01,
            decay: 0.9,
            eps: 1e-10,
            batch: 64,
            steps: 20_000,
            sampler: SamplerKind::Forward,
            traj_steps: 5,
            multistep: false,
            edge_dropout: 0.5,
            logit_scale: 10.0,
            goal: GoalMode::Node,
            seed: 0,
            probe_every: 0,
        }
    }

    /// Batch and step counts used for the full-size Wikipedia runs.
    pub fn full_scale() -> Self {
        TrainConfig {
            batch: 512,
            steps: 50_000,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.traj_steps == 0 {
            return Err(Error::invalid("trajectory length must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.edge_dropout) {
            return Err(Error::invalid("edge dropout must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.decay) || !(self.eps > 0.0) {
            return Err(Error::invalid(
                "decay must lie in [0, 1) and eps be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub loss: f64,
    pub probe: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
    pub sampler: SamplerStats,
}

impl TrainLog {
    /// CSV with columns `step,loss,success_probe`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "step,loss,success_probe")?;
        for r in &self.rows {
            match r.probe {
                Some(p) => writeln!(out, "{},{},{}", r.step, r.loss, p)?,
                None => writeln!(out, "{},{},", r.step, r.loss)?,
            }
        }
        Ok(())
    }

    /// Mean loss over rows `[from, to)`.
    pub fn mean_loss(&self, from: usize, to: usize) -> f64 {
        let rows = &self.rows[from.min(self.rows.len())..to.min(self.rows.len())];
        rows.iter().map(|r| r.loss).sum::<f64>() / rows.len().max(1) as f64
    }
}

/// Success probe called during training.
pub type Probe<'a> = &'a (dyn Fn(&PolicyParams) -> Result<f64> + Sync);

/// Draws before a batch element is given up on.
const EXAMPLE_ATTEMPTS: usize = 100;

/// One training transition from a fresh trajectory: a uniformly chosen step
/// whose current node is not yet the target, with dropout applied to the
/// current node's out-edges.
pub(crate) fn sample_example(
    ctx: &NavContext,
    cfg: &TrainConfig,
    cache: Option<&Arc<DistanceCache>>,
    rng: &mut impl Rng,
) -> Result<(Example, SamplerStats)> {
    let mut sampler = Sampler::new(cfg.sampler, cfg.traj_steps, cfg.multistep)?;
    sampler.cache = cache.cloned();
    let g = ctx.graph;
    for _ in 0..EXAMPLE_ATTEMPTS {
        let t = sampler.sample(g, rng)?;
        let target = t.target();
        let usable: Vec<usize> = (0..t.steps()).filter(|&i| t.nodes[i] != target).collect();
        if usable.is_empty() {
            continue;
        }
        let i = usable[rng.random_range(0..usable.len())];
        let (cur, next) = (t.nodes[i], t.nodes[i + 1]);
        let edges = mask_edges(g.out(cur), next, cfg.edge_dropout, rng);
        let gold = edges.iter().position(|e| e.target == next).unwrap();
        let goal = ctx.goal(target, cfg.goal, rng)?;
        let ex = Example {
            state: ctx.table.get(cur).to_vec(),
            goal,
            actions: edge_features(ctx.table, &edges, &t.nodes[..=i]),
            gold,
        };
        return Ok((ex, sampler.stats));
    }
    Err(Error::invalid(format!(
        "no usable transition after {EXAMPLE_ATTEMPTS} trajectories"
    )))
}

/// Behavioral cloning with RMSProp. Batch element `i` of step `s` draws from
/// its own stream derived from `(seed, s, i)`, so results do not depend on
/// the number of worker threads.
pub fn train_bc(
    ctx: &NavContext,
    cfg: &TrainConfig,
    probe: Option<Probe>,
) -> Result<(PolicyParams, TrainLog)> {
    cfg.validate()?;
    if ctx.graph.is_empty() {
        return Err(Error::invalid("cannot train on an empty graph"));
    }
    let params = PolicyParams::init(ctx.table.dim(), cfg.logit_scale, false, cfg.seed);
    continue_bc(ctx, cfg, params, probe)
}

/// Behavioral cloning from given starting parameters.
pub fn continue_bc(
    ctx: &NavContext,
    cfg: &TrainConfig,
    mut params: PolicyParams,
    probe: Option<Probe>,
) -> Result<(PolicyParams, TrainLog)> {
    cfg.validate()?;
    params.check()?;
    let cache =
        (cfg.sampler == SamplerKind::ShortestPath).then(|| Arc::new(DistanceCache::new(ctx.graph)));
    let mut opt = RmsProp::new(params.data.len(), cfg.lr, cfg.decay, cfg.eps);
    let mut log = TrainLog::default();
    for step in 0..cfg.steps {
        let drawn: Vec<(Example, SamplerStats)> = (0..cfg.batch)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_from(cfg.seed, &[stream::TRAIN_BATCH, step as u64, i as u64]);
                sample_example(ctx, cfg, cache.as_ref(), &mut rng)
            })
            .collect::<Result<_>>()?;
        let mut batch = Vec::with_capacity(drawn.len());
        for (ex, st) in drawn {
            log.sampler.merge(&st);
            batch.push(ex);
        }
        let (loss, grad) = bc_loss_and_grad(&params, &batch)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step, loss });
        }
        opt.step(&mut params.data, &grad);
        let probe_now = cfg.probe_every > 0 && (step + 1) % cfg.probe_every == 0;
        let probe = match probe {
            Some(f) if probe_now => Some(f(&params)?),
            _ => None,
        };
        log.rows.push(LogRow { step, loss, probe });
    }
    Ok((params, log))
}
