//! Demonstration trajectories: forward random walks, reverse random walks and
//! random shortest paths, with optional multistep lengths and edge dropout.

use std::io::Write;
use std::sync::{Arc, OnceLock};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Direction, Edge, Graph, NodeId};

/// Start resamples allowed before a forward walk gives up.
pub const FORWARD_RETRIES: usize = 100;

/// A walk `nodes[0] -> ... -> nodes[L]`; the last node is the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub nodes: Vec<NodeId>,
}

impl Trajectory {
    pub fn start(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    /// Number of steps (edges).
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// True when every consecutive pair is an out-edge of `g`.
    pub fn is_walk_of(&self, g: &Graph) -> bool {
        self.nodes.windows(2).all(|w| {
            g.neighbors(w[0])
                .map(|es| es.iter().any(|e| e.target == w[1]))
                .unwrap_or(false)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SamplerKind {
    Forward,
    Reverse,
    ShortestPath,
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "forward" => Ok(SamplerKind::Forward),
            "reverse" => Ok(SamplerKind::Reverse),
            "shortest" | "shortest_path" | "shortestpath" => Ok(SamplerKind::ShortestPath),
            _ => Err(Error::invalid(format!("unknown sampler {s:?}"))),
        }
    }
}

/// Walks `steps` uniform out-edges from a uniform start. A walk that reaches
/// a node without out-edges early is abandoned and a new start drawn.
pub fn sample_forward(g: &Graph, steps: usize, rng: &mut impl Rng) -> Result<Trajectory> {
    sample_forward_counted(g, steps, rng).map(|(t, _)| t)
}

fn sample_forward_counted(
    g: &Graph,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<(Trajectory, usize)> {
    if g.is_empty() {
        return Err(Error::invalid("cannot sample from an empty graph"));
    }
    if steps == 0 {
        return Err(Error::invalid("trajectory length must be at least 1"));
    }
    for retry in 0..FORWARD_RETRIES {
        let mut cur = NodeId::from(rng.random_range(0..g.len()));
        let mut nodes = Vec::with_capacity(steps + 1);
        nodes.push(cur);
        for _ in 0..steps {
            match g.out(cur).choose(rng) {
                Some(e) => {
                    cur = e.target;
                    nodes.push(cur);
                }
                None => break,
            }
        }
        if nodes.len() == steps + 1 {
            return Ok((Trajectory { nodes }, retry));
        }
    }
    Err(Error::SinkHeavy {
        steps,
        retries: FORWARD_RETRIES,
    })
}

/// Walks backwards from a uniform target along uniform in-edges. Stops early
/// at a node without in-edges, so the result may have fewer than `steps`
/// steps; a target without in-edges gives a single-node trajectory.
pub fn sample_reverse(g: &Graph, steps: usize, rng: &mut impl Rng) -> Result<Trajectory> {
    if g.is_empty() {
        return Err(Error::invalid("cannot sample from an empty graph"));
    }
    let target = NodeId::from(rng.random_range(0..g.len()));
    Ok(reverse_from(g, target, steps, rng))
}

pub fn reverse_from(g: &Graph, target: NodeId, steps: usize, rng: &mut impl Rng) -> Trajectory {
    let mut nodes = vec![target];
    let mut cur = target;
    for _ in 0..steps {
        match g.rev(cur).choose(rng) {
            Some(&p) => {
                cur = p;
                nodes.push(cur);
            }
            None => break,
        }
    }
    nodes.reverse();
    Trajectory { nodes }
}

/// A shortest path of exactly `steps` edges to a uniform target from a start
/// drawn uniformly among the nodes at that distance. `None` when the target
/// has no node at that distance. Each step moves to a uniformly chosen
/// successor one hop closer to the target.
pub fn sample_shortest(g: &Graph, steps: usize, rng: &mut impl Rng) -> Result<Option<Trajectory>> {
    shortest_with(g, steps, rng, |t| {
        g.bfs_levels(t, steps as u32, Direction::Reverse)
            .map(Arc::new)
    })
}

/// Per-target reverse distances, computed on first use. Sampling through the
/// cache gives the same trajectories as [`sample_shortest`] for the same rng.
#[derive(Debug)]
pub struct DistanceCache {
    levels: Vec<OnceLock<Arc<Vec<u32>>>>,
}

impl DistanceCache {
    pub fn new(g: &Graph) -> Self {
        DistanceCache {
            levels: (0..g.len()).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Distance from every node to `target`.
    pub fn to_target(&self, g: &Graph, target: NodeId) -> Result<Arc<Vec<u32>>> {
        g.check(target)?;
        Ok(self.levels[target.index()]
            .get_or_init(|| {
                Arc::new(
                    g.bfs_levels(target, u32::MAX - 1, Direction::Reverse)
                        .unwrap(),
                )
            })
            .clone())
    }
}

pub fn sample_shortest_cached(
    g: &Graph,
    cache: &DistanceCache,
    steps: usize,
    rng: &mut impl Rng,
) -> Result<Option<Trajectory>> {
    shortest_with(g, steps, rng, |t| cache.to_target(g, t))
}

fn shortest_with<R: Rng>(
    g: &Graph,
    steps: usize,
    rng: &mut R,
    levels: impl FnOnce(NodeId) -> Result<Arc<Vec<u32>>>,
) -> Result<Option<Trajectory>> {
    if g.is_empty() {
        return Err(Error::invalid("cannot sample from an empty graph"));
    }
    if steps == 0 {
        return Err(Error::invalid("trajectory length must be at least 1"));
    }
    let target = NodeId::from(rng.random_range(0..g.len()));
    let dist = levels(target)?;
    let at_t: Vec<NodeId> = g
        .node_ids()
        .filter(|n| dist[n.index()] == steps as u32)
        .collect();
    let Some(&start) = at_t.choose(rng) else {
        return Ok(None);
    };
    let mut nodes = vec![start];
    let mut cur = start;
    while cur != target {
        let want = dist[cur.index()] - 1;
        let closer: Vec<NodeId> = g
            .out(cur)
            .iter()
            .map(|e| e.target)
            .filter(|v| dist[v.index()] == want)
            .collect();
        cur = *closer
            .choose(rng)
            .expect("bfs level has a successor one hop closer");
        nodes.push(cur);
    }
    Ok(Some(Trajectory { nodes }))
}

/// Forward walk of a length drawn uniformly from `1..=max_steps`.
pub fn sample_multistep(g: &Graph, max_steps: usize, rng: &mut impl Rng) -> Result<Trajectory> {
    if max_steps == 0 {
        return Err(Error::invalid("trajectory length must be at least 1"));
    }
    let steps = rng.random_range(1..=max_steps);
    sample_forward(g, steps, rng)
}

/// Counters collected while sampling.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SamplerStats {
    pub emitted: usize,
    /// Reverse walks that stopped before the requested length.
    pub truncated: usize,
    /// Reverse walks whose target had no in-edges.
    pub degenerate: usize,
    /// Forward start resamples.
    pub restarts: usize,
    /// Shortest-path draws with no start at the requested distance.
    pub absent: usize,
}

impl SamplerStats {
    pub fn merge(&mut self, o: &SamplerStats) {
        self.emitted += o.emitted;
        self.truncated += o.truncated;
        self.degenerate += o.degenerate;
        self.restarts += o.restarts;
        self.absent += o.absent;
    }
}

/// Draws shortest-path lengths until one is available.
const SHORTEST_ATTEMPTS: usize = 1000;

/// A configured trajectory distribution.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub steps: usize,
    /// Draw each trajectory's length uniformly from `1..=steps`.
    pub multistep: bool,
    pub stats: SamplerStats,
    /// Speeds up shortest-path sampling on repeated use.
    pub cache: Option<Arc<DistanceCache>>,
}

impl Sampler {
    pub fn new(kind: SamplerKind, steps: usize, multistep: bool) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("trajectory length must be at least 1"));
        }
        Ok(Sampler {
            kind,
            steps,
            multistep,
            stats: SamplerStats::default(),
            cache: None,
        })
    }

    fn length(&self, rng: &mut impl Rng) -> usize {
        if self.multistep {
            rng.random_range(1..=self.steps)
        } else {
            self.steps
        }
    }

    /// One trajectory. Reverse samples may be shorter than requested,
    /// including the single-node degenerate case.
    pub fn sample(&mut self, g: &Graph, rng: &mut impl Rng) -> Result<Trajectory> {
        let t = match self.kind {
            SamplerKind::Forward => {
                let len = self.length(rng);
                let (t, restarts) = sample_forward_counted(g, len, rng)?;
                self.stats.restarts += restarts;
                t
            }
            SamplerKind::Reverse => {
                let len = self.length(rng);
                let t = sample_reverse(g, len, rng)?;
                if t.steps() < len {
                    self.stats.truncated += 1;
                }
                if t.steps() == 0 {
                    self.stats.degenerate += 1;
                }
                t
            }
            SamplerKind::ShortestPath => {
                let mut found = None;
                for _ in 0..SHORTEST_ATTEMPTS {
                    let len = self.length(rng);
                    let drawn = match &self.cache {
                        Some(c) => sample_shortest_cached(g, c, len, rng)?,
                        None => sample_shortest(g, len, rng)?,
                    };
                    match drawn {
                        Some(t) => {
                            found = Some(t);
                            break;
                        }
                        None => self.stats.absent += 1,
                    }
                }
                found.ok_or_else(|| {
                    Error::invalid(format!(
                        "no shortest path of up to {} steps found",
                        self.steps
                    ))
                })?
            }
        };
        self.stats.emitted += 1;
        Ok(t)
    }
}

/// Keeps each out-edge independently with probability `1 - p_drop`, except
/// the gold edge (by target), which always survives. Order is preserved.
pub fn mask_edges(edges: &[Edge], gold: NodeId, p_drop: f64, rng: &mut impl Rng) -> Vec<Edge> {
    edges
        .iter()
        .filter(|e| e.target == gold || rng.random::<f64>() >= p_drop)
        .copied()
        .collect()
}

/// One line per trajectory, node ids separated by spaces.
pub fn dump_trajectories<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    mut out: impl Write,
) -> Result<()> {
    for t in trajectories {
        let line: Vec<String> = t.nodes.iter().map(|n| n.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{test_graphs, EdgeType, GraphBuilder};
    use crate::rng::rng_from;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_node(i as u32, format!("n{i}"), 0, "x");
        }
        for &(u, v) in edges {
            b.add_edge(u.into(), EdgeType::Hyperlink, v.into()).unwrap();
        }
        b.build()
    }

    #[test]
    fn chain_walk_is_forced() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let mut rng = rng_from(0, &[]);
        for _ in 0..50 {
            let t = sample_forward(&g, 3, &mut rng).unwrap();
            assert_eq!(t.start(), t.target());
            assert!(t.is_walk_of(&g));
        }
    }

    #[test]
    fn forward_step_is_uniform_over_out_edges() {
        // hub 0 with four leaves that point back to the hub
        let g = graph(
            5,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 0),
                (2, 0),
                (3, 0),
                (4, 0),
            ],
        );
        let mut rng = rng_from(1, &[]);
        let mut counts = [0usize; 5];
        let mut from_hub = 0;
        for _ in 0..40_000 {
            let t = sample_forward(&g, 1, &mut rng).unwrap();
            if t.start() == NodeId(0) {
                counts[t.target().index()] += 1;
                from_hub += 1;
            }
        }
        for &c in &counts[1..] {
            let f = c as f64 / from_hub as f64;
            assert!((f - 0.25).abs() < 0.02, "{f}");
        }
    }

    #[test]
    fn sink_heavy_graph_errors() {
        let g = graph(3, &[(0, 1)]);
        let r = sample_forward(&g, 2, &mut rng_from(0, &[]));
        assert!(matches!(r, Err(Error::SinkHeavy { .. })));
    }

    #[test]
    fn reverse_walk_on_single_edge() {
        let g = graph(2, &[(0, 1)]);
        let mut rng = rng_from(2, &[]);
        for _ in 0..20 {
            let t = reverse_from(&g, NodeId(1), 3, &mut rng);
            assert_eq!(t.nodes, [NodeId(0), NodeId(1)]);
        }
        let t = reverse_from(&g, NodeId(0), 3, &mut rng);
        assert_eq!(t.nodes, [NodeId(0)]);
    }

    #[test]
    fn reverse_pairs_are_forward_edges_and_dead_ends_counted() {
        let (g, _) = test_graphs::random(80, 2.0, &mut rng_from(3, &[]));
        let mut s = Sampler::new(SamplerKind::Reverse, 5, false).unwrap();
        let mut rng = rng_from(4, &[]);
        for _ in 0..1000 {
            let t = s.sample(&g, &mut rng).unwrap();
            assert!(t.is_walk_of(&g));
            assert!(t.steps() <= 5);
        }
        assert!(s.stats.truncated > 0);
        assert!(s.stats.degenerate <= s.stats.truncated);
    }

    #[test]
    fn shortest_on_chain_is_the_chain() {
        let g = test_graphs::chain(6);
        let mut rng = rng_from(5, &[]);
        let mut got = 0;
        for _ in 0..100 {
            if let Some(t) = sample_shortest(&g, 5, &mut rng).unwrap() {
                assert_eq!(t.nodes, (0..6).map(NodeId::from).collect::<Vec<_>>());
                got += 1;
            }
        }
        assert!(got > 0);
        assert!(sample_shortest(&g, 6, &mut rng).unwrap().is_none());
    }

    #[test]
    fn shortest_matches_bfs_oracle() {
        let (g, _) = test_graphs::random(120, 3.0, &mut rng_from(6, &[]));
        let mut rng = rng_from(7, &[]);
        let mut checked = 0;
        while checked < 200 {
            let len = rng.random_range(1..=6);
            if let Some(t) = sample_shortest(&g, len, &mut rng).unwrap() {
                assert!(t.is_walk_of(&g));
                let oracle = g
                    .shortest_path(t.start(), t.target(), 100)
                    .unwrap()
                    .unwrap();
                assert_eq!(oracle.len(), t.nodes.len());
                checked += 1;
            }
        }
    }

    #[test]
    fn cached_shortest_matches_uncached() {
        let (g, _) = test_graphs::random(150, 2.5, &mut rng_from(13, &[]));
        let cache = DistanceCache::new(&g);
        let (mut r1, mut r2) = (rng_from(14, &[]), rng_from(14, &[]));
        for i in 0..300 {
            let len = 1 + i % 7;
            assert_eq!(
                sample_shortest(&g, len, &mut r1).unwrap(),
                sample_shortest_cached(&g, &cache, len, &mut r2).unwrap()
            );
        }
    }

    #[test]
    fn multistep_lengths_are_uniform() {
        let (g, _) = test_graphs::random(200, 6.0, &mut rng_from(8, &[]));
        let mut rng = rng_from(19, &[]);
        let mut hist = [0f64; 20];
        for _ in 0..20_000 {
            let t = sample_multistep(&g, 20, &mut rng).unwrap();
            assert!((1..=20).contains(&t.steps()));
            hist[t.steps() - 1] += 1.0;
        }
        let e = 20_000.0 / 20.0;
        let chi2: f64 = hist.iter().map(|o| (o - e) * (o - e) / e).sum();
        let p = 1.0 - ChiSquared::new(19.0).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 {chi2} p {p}");
        for _ in 0..100 {
            assert_eq!(sample_multistep(&g, 1, &mut rng).unwrap().steps(), 1);
        }
    }

    #[test]
    fn dropout_keeps_gold_and_drops_at_rate() {
        let edges: Vec<Edge> = (0..10)
            .map(|i| Edge {
                kind: EdgeType::Hyperlink,
                target: NodeId(i),
            })
            .collect();
        let mut rng = rng_from(10, &[]);
        assert_eq!(mask_edges(&edges, NodeId(3), 0.0, &mut rng), edges);
        assert_eq!(mask_edges(&edges, NodeId(3), 1.0, &mut rng), vec![edges[3]]);
        let mut kept = 0;
        for _ in 0..10_000 {
            let m = mask_edges(&edges, NodeId(3), 0.5, &mut rng);
            assert!(m.iter().any(|e| e.target == NodeId(3)));
            kept += m.len() - 1;
        }
        let rate = kept as f64 / (9.0 * 10_000.0);
        assert!((rate - 0.5).abs() < 0.02, "{rate}");
    }

    #[test]
    fn samplers_are_deterministic() {
        let (g, _) = test_graphs::random(100, 3.0, &mut rng_from(11, &[]));
        for kind in [
            SamplerKind::Forward,
            SamplerKind::Reverse,
            SamplerKind::ShortestPath,
        ] {
            let run = || {
                let mut s = Sampler::new(kind, 4, true).unwrap();
                let mut rng = rng_from(12, &[]);
                (0..50)
                    .map(|_| s.sample(&g, &mut rng).unwrap())
                    .collect::<Vec<_>>()
            };
            assert_eq!(run(), run());
        }
    }

    #[test]
    fn dump_format() {
        let t = Trajectory {
            nodes: vec![NodeId(3), NodeId(1), NodeId(4)],
        };
        let mut out = Vec::new();
        dump_trajectories([&t], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "3 1 4\n");
    }
}
