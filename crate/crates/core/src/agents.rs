//! Budgeted navigation episodes, baseline agents and success-rate evaluation.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::cosine_similarity;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId};
use crate::policy::{
    argmax_action, edge_features, score_input, state_input, GoalMode, NavContext, PolicyParams,
};
use crate::rng::{rng_from, stream};
use crate::trajectories::sample_forward;

pub const DEFAULT_BUDGET: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    /// Target is the end of a T-step forward walk.
    NavT(usize),
    /// As `NavT` with T drawn from `1..=T_max` per episode.
    Multistep(usize),
    /// As `NavT`, but the goal is one sentence of the target's text.
    SentenceSearch(usize),
}

impl TaskKind {
    pub fn steps(&self) -> usize {
        match *self {
            TaskKind::NavT(t) | TaskKind::Multistep(t) | TaskKind::SentenceSearch(t) => t,
        }
    }

    pub fn goal_mode(&self) -> GoalMode {
        match self {
            TaskKind::SentenceSearch(_) => GoalMode::Sentence,
            _ => GoalMode::Node,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::NavT(_) => "nav",
            TaskKind::Multistep(_) => "multistep",
            TaskKind::SentenceSearch(_) => "sentence",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub budget: usize,
    pub episodes: usize,
    pub seed: u64,
}

impl TaskSpec {
    pub fn new(kind: TaskKind, budget: usize, episodes: usize, seed: u64) -> Self {
        TaskSpec {
            kind,
            budget,
            episodes,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 || self.kind.steps() == 0 {
            return Err(Error::invalid("budget and task length must be at least 1"));
        }
        if self.episodes == 0 {
            return Err(Error::invalid("at least one episode is required"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub enum AgentKind<'a> {
    Policy(&'a PolicyParams),
    Random,
    /// Moves to the neighbor most cosine-similar to the goal.
    Greedy,
    /// Depth-limited DFS with random child order. A depth of 0 means "the
    /// task's T" when run through [`evaluate`].
    RandomDfs {
        max_depth: usize,
    },
    /// Depth-limited DFS visiting children by descending goal similarity.
    GreedyDfs {
        max_depth: usize,
    },
    /// Follows a shortest path to the target. For testing the harness.
    Oracle,
}

impl AgentKind<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            AgentKind::Policy(_) => "policy",
            AgentKind::Random => "random",
            AgentKind::Greedy => "greedy",
            AgentKind::RandomDfs { .. } => "random_dfs",
            AgentKind::GreedyDfs { .. } => "greedy_dfs",
            AgentKind::Oracle => "oracle",
        }
    }

    fn for_task(self, steps: usize) -> Self {
        match self {
            AgentKind::RandomDfs { max_depth: 0 } => AgentKind::RandomDfs { max_depth: steps },
            AgentKind::GreedyDfs { max_depth: 0 } => AgentKind::GreedyDfs { max_depth: steps },
            a => a,
        }
    }
}

/// The node to reach and the vector the agent sees.
#[derive(Clone, Debug)]
pub struct Goal {
    pub node: NodeId,
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps_used: usize,
    /// Nodes from the start to where the agent stopped; for DFS agents the
    /// final root-to-frontier branch.
    pub path: Vec<NodeId>,
    pub target: NodeId,
    /// DFS agents: every node whose children were generated, in order.
    pub expanded: Vec<NodeId>,
}

/// Neighbor with the highest cosine similarity to the goal; ties go to the
/// lowest id.
pub fn greedy_step(ctx: &NavContext, current: NodeId, goal: &[f64]) -> Result<NodeId> {
    let edges = ctx.graph.neighbors(current)?;
    let mut best: Option<(f64, NodeId)> = None;
    for e in edges {
        let c = cosine_similarity(ctx.table.get(e.target), goal)?;
        let better = match best {
            None => true,
            Some((bc, bn)) => c > bc || (c == bc && e.target < bn),
        };
        if better {
            best = Some((c, e.target));
        }
    }
    best.map(|(_, n)| n)
        .ok_or_else(|| Error::invalid(format!("node {current} has no out-edges")))
}

fn policy_step(
    ctx: &NavContext,
    params: &PolicyParams,
    cur: NodeId,
    goal: &[f64],
    path: &[NodeId],
) -> Result<NodeId> {
    let edges = ctx.graph.out(cur);
    let actions = edge_features(ctx.table, edges, path);
    let s = score_input(params, state_input(ctx.table.get(cur), goal), &actions)?;
    Ok(edges[argmax_action(&s.probs, edges)].target)
}

/// Follows the policy for up to `steps` moves with no stopping target, as
/// the evidence pipeline does. Stops early at a node without out-edges.
pub fn policy_walk(
    ctx: &NavContext,
    params: &PolicyParams,
    start: NodeId,
    goal: &[f64],
    steps: usize,
) -> Result<Vec<NodeId>> {
    ctx.graph.check(start)?;
    if goal.len() != ctx.table.dim() {
        return Err(Error::invalid(
            "goal vector dimension does not match the embeddings",
        ));
    }
    let mut path = vec![start];
    let mut cur = start;
    for _ in 0..steps {
        if ctx.graph.out(cur).is_empty() {
            break;
        }
        cur = policy_step(ctx, params, cur, goal, &path)?;
        path.push(cur);
    }
    Ok(path)
}

/// Runs one episode. Moving along an edge costs one step; the start is free.
/// Single-path agents stop on reaching the goal, running out of budget, or
/// standing on a node without out-edges.
pub fn run_episode(
    agent: &AgentKind,
    ctx: &NavContext,
    start: NodeId,
    goal: &Goal,
    budget: usize,
    rng: &mut impl Rng,
) -> Result<EpisodeResult> {
    let g = ctx.graph;
    g.check(start)?;
    g.check(goal.node)?;
    if goal.vector.len() != ctx.table.dim() {
        return Err(Error::invalid(
            "goal vector dimension does not match the embeddings",
        ));
    }
    match *agent {
        AgentKind::RandomDfs { max_depth } => {
            return dfs_run(ctx, start, goal, budget, max_depth, DfsOrder::Random, rng)
        }
        AgentKind::GreedyDfs { max_depth } => {
            return dfs_run(ctx, start, goal, budget, max_depth, DfsOrder::Greedy, rng)
        }
        _ => {}
    }
    let oracle_dist = match agent {
        AgentKind::Oracle => {
            Some(g.bfs_levels(goal.node, u32::MAX - 1, crate::graph::Direction::Reverse)?)
        }
        _ => None,
    };
    let mut path = vec![start];
    let mut cur = start;
    let mut steps = 0;
    while cur != goal.node && steps < budget {
        let edges: &[Edge] = g.out(cur);
        if edges.is_empty() {
            break;
        }
        cur = match agent {
            AgentKind::Policy(p) => policy_step(ctx, p, cur, &goal.vector, &path)?,
            AgentKind::Random => edges.choose(rng).unwrap().target,
            AgentKind::Greedy => greedy_step(ctx, cur, &goal.vector)?,
            AgentKind::Oracle => {
                let d = oracle_dist.as_ref().unwrap();
                edges
                    .iter()
                    .map(|e| e.target)
                    .min_by_key(|t| (d[t.index()], *t))
                    .unwrap()
            }
            AgentKind::RandomDfs { .. } | AgentKind::GreedyDfs { .. } => unreachable!(),
        };
        steps += 1;
        path.push(cur);
    }
    Ok(EpisodeResult {
        success: cur == goal.node,
        steps_used: steps,
        path,
        target: goal.node,
        expanded: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DfsOrder {
    Random,
    Greedy,
}

/// Depth-limited depth-first search. Entering a node costs one step and
/// backtracking is free. Branches stop at `max_depth` edges from the start.
/// No node is expanded twice; a node first entered at the depth limit is
/// entered again if a shallower branch reaches it.
pub fn dfs_run(
    ctx: &NavContext,
    start: NodeId,
    goal: &Goal,
    budget: usize,
    max_depth: usize,
    order: DfsOrder,
    rng: &mut impl Rng,
) -> Result<EpisodeResult> {
    let g = ctx.graph;
    g.check(start)?;
    g.check(goal.node)?;
    let children = |n: NodeId, rng: &mut dyn rand::RngCore| -> Result<Vec<NodeId>> {
        let mut c: Vec<NodeId> = g.out(n).iter().map(|e| e.target).collect();
        match order {
            DfsOrder::Random => c.shuffle(rng),
            DfsOrder::Greedy => {
                let mut scored = c
                    .iter()
                    .map(|&t| Ok((cosine_similarity(ctx.table.get(t), &goal.vector)?, t)))
                    .collect::<Result<Vec<_>>>()?;
                scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                c = scored.into_iter().map(|(_, t)| t).collect();
            }
        }
        Ok(c)
    };
    let done = |success,
                steps,
                stack: &[(NodeId, Vec<NodeId>, usize)],
                extra: Option<NodeId>,
                expanded| {
        let mut path: Vec<NodeId> = stack.iter().map(|f| f.0).collect();
        path.extend(extra);
        EpisodeResult {
            success,
            steps_used: steps,
            path,
            target: goal.node,
            expanded,
        }
    };
    if start == goal.node {
        return Ok(done(true, 0, &[(start, Vec::new(), 0)], None, Vec::new()));
    }
    // Minimum depth at which each node was entered. A node first met at the
    // depth limit has not been expanded and may be entered again from a
    // shallower branch.
    let mut entered = HashMap::from([(start, 0usize)]);
    let mut expanded = Vec::new();
    let mut steps = 0;
    let mut stack = vec![(start, children(start, rng)?, 0usize)];
    loop {
        let depth = stack.len() - 1;
        let top = stack.last_mut().unwrap();
        if depth >= max_depth || top.2 >= top.1.len() {
            if stack.len() == 1 {
                return Ok(done(false, steps, &stack, None, expanded));
            }
            stack.pop();
            continue;
        }
        let c = top.1[top.2];
        top.2 += 1;
        let dc = depth + 1;
        if entered.get(&c).is_some_and(|&d| d <= dc || d < max_depth) {
            continue;
        }
        entered.insert(c, dc);
        steps += 1;
        if c == goal.node {
            return Ok(done(true, steps, &stack, Some(c), expanded));
        }
        if steps >= budget {
            return Ok(done(false, steps, &stack, Some(c), expanded));
        }
        if dc >= max_depth {
            continue;
        }
        expanded.push(c);
        let kids = children(c, rng)?;
        stack.push((c, kids, 0));
    }
}

/// Start, goal and target of episode `episode` of a task. Independent of the
/// agent.
pub fn episode_setup(ctx: &NavContext, task: &TaskSpec, episode: usize) -> Result<(NodeId, Goal)> {
    let mut rng = rng_from(task.seed, &[stream::EVAL_EPISODE, episode as u64]);
    let steps = match task.kind {
        TaskKind::Multistep(t) => rng.random_range(1..=t),
        k => k.steps(),
    };
    let walk = sample_forward(ctx.graph, steps, &mut rng)?;
    let target = walk.target();
    let vector = ctx.goal(target, task.kind.goal_mode(), &mut rng)?;
    Ok((
        walk.start(),
        Goal {
            node: target,
            vector,
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub task: TaskKind,
    pub agent: String,
    pub budget: usize,
    pub episodes: usize,
    pub success_rate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub stderr: f64,
    #[serde(skip)]
    pub results: Vec<(NodeId, EpisodeResult)>,
}

impl Evaluation {
    /// `[p - k*se, p + k*se]`.
    pub fn interval(&self, k: f64) -> (f64, f64) {
        (
            self.success_rate - k * self.stderr,
            self.success_rate + k * self.stderr,
        )
    }
}

impl fmt::Display for Evaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} T={} {}: {:.1}% +- {:.1} ({} episodes, B={})",
            self.task.name(),
            self.task.steps(),
            self.agent,
            100.0 * self.success_rate,
            100.0 * self.stderr,
            self.episodes,
            self.budget
        )
    }
}

/// Runs every episode of a task and reports the success rate.
pub fn evaluate(task: &TaskSpec, agent: &AgentKind, ctx: &NavContext) -> Result<Evaluation> {
    task.validate()?;
    let agent = agent.for_task(task.kind.steps());
    let results: Vec<(NodeId, EpisodeResult)> = (0..task.episodes)
        .into_par_iter()
        .map(|e| {
            let (start, goal) = episode_setup(ctx, task, e)?;
            let mut rng = rng_from(task.seed, &[stream::EVAL_AGENT, e as u64]);
            Ok((
                start,
                run_episode(&agent, ctx, start, &goal, task.budget, &mut rng)?,
            ))
        })
        .collect::<Result<_>>()?;
    let n = results.len() as f64;
    let p = results.iter().filter(|r| r.1.success).count() as f64 / n;
    Ok(Evaluation {
        task: task.kind,
        agent: agent.name().to_owned(),
        budget: task.budget,
        episodes: results.len(),
        success_rate: p,
        stderr: (p * (1.0 - p) / n).sqrt(),
        results,
    })
}

pub fn write_report_csv<'a>(
    rows: impl IntoIterator<Item = &'a Evaluation>,
    mut out: impl Write,
) -> Result<()> {
    writeln!(out, "task,agent,T,B,episodes,success_rate,stderr")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6}",
            r.task.name(),
            r.agent,
            r.task.steps(),
            r.budget,
            r.episodes,
            r.success_rate,
            r.stderr
        )?;
    }
    Ok(())
}

/// Per-episode trace: start, target and the visited path, by node label.
pub fn write_trace(g: &Graph, eval: &Evaluation, mut out: impl Write) -> Result<()> {
    for (i, (start, r)) in eval.results.iter().enumerate() {
        writeln!(
            out,
            "episode {i}: {} from {} to {} in {} steps",
            if r.success { "success" } else { "failure" },
            g.label(*start),
            g.label(r.target),
            r.steps_used
        )?;
        for n in &r.path {
            writeln!(out, "  {}", g.label(*n))?;
        }
    }
    Ok(())
}
