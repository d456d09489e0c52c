//! Degree distributions, sampled shortest-path lengths and snapshot diffs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Direction, EdgeType, Graph, NodeId, UNREACHED};

/// Counts over integer buckets. Bucket `i` covers
/// `boundaries[i]..boundaries[i + 1]`; the last one is open-ended.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub boundaries: Vec<u64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    /// One bucket per value from 0 to the largest value seen.
    pub fn exact(values: impl IntoIterator<Item = u64>) -> Self {
        let mut counts: Vec<u64> = Vec::new();
        for v in values {
            let v = v as usize;
            if v >= counts.len() {
                counts.resize(v + 1, 0);
            }
            counts[v] += 1;
        }
        Self::from_counts(counts)
    }

    fn from_counts(counts: Vec<u64>) -> Self {
        Histogram {
            boundaries: (0..counts.len() as u64).collect(),
            total: counts.iter().sum(),
            counts,
        }
    }

    /// Adds the counts of another exact histogram.
    pub fn merge(&mut self, other: &Histogram) {
        let mut counts = std::mem::take(&mut self.counts);
        if other.counts.len() > counts.len() {
            counts.resize(other.counts.len(), 0);
        }
        for (a, b) in counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        *self = Self::from_counts(counts);
    }

    /// Regroups an exact histogram into buckets `0, 1, 2-3, 4-7, ...`.
    pub fn log_binned(&self) -> Histogram {
        let bucket = |v: u64| if v == 0 { 0 } else { v.ilog2() as usize + 1 };
        let n = self.boundaries.last().map_or(1, |&v| bucket(v) + 1);
        let mut counts = vec![0u64; n];
        for (&lo, &c) in self.boundaries.iter().zip(&self.counts) {
            counts[bucket(lo)] += c;
        }
        Histogram {
            boundaries: (0..n)
                .map(|i| if i == 0 { 0 } else { 1u64 << (i - 1) })
                .collect(),
            counts,
            total: self.total,
        }
    }

    /// Lower bound of the bucket holding the lower median.
    pub fn median(&self) -> Option<u64> {
        if self.total == 0 {
            return None;
        }
        let half = self.total.div_ceil(2);
        let mut acc = 0;
        for (&lo, &c) in self.boundaries.iter().zip(&self.counts) {
            acc += c;
            if acc >= half {
                return Some(lo);
            }
        }
        None
    }

    pub fn max_value(&self) -> Option<u64> {
        self.boundaries
            .iter()
            .zip(&self.counts)
            .rev()
            .find(|(_, &c)| c > 0)
            .map(|(&b, _)| b)
    }

    /// `bucket,count` rows, one per bucket, keyed by lower bound.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "bucket,count")?;
        for (b, c) in self.boundaries.iter().zip(&self.counts) {
            writeln!(out, "{b},{c}")?;
        }
        Ok(())
    }
}

pub fn degree_histogram(g: &Graph, dir: Direction) -> Histogram {
    Histogram::exact(g.node_ids().map(|n| match dir {
        Direction::Forward => g.out(n).len() as u64,
        Direction::Reverse => g.in_degree(n) as u64,
    }))
}

/// Shortest-path lengths from the given sources to every node they reach
/// within `cap` hops, including each source itself at length 0.
pub fn spl_from_sources(g: &Graph, sources: &[NodeId], cap: u32) -> Result<Histogram> {
    let parts = sources
        .par_iter()
        .map(|&s| {
            let levels = g.bfs_levels(s, cap, Direction::Forward)?;
            Ok(Histogram::exact(
                levels
                    .into_iter()
                    .filter(|&l| l != UNREACHED)
                    .map(u64::from),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut h = Histogram::default();
    for p in &parts {
        h.merge(p);
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplEstimate {
    pub sources: Vec<NodeId>,
    pub histogram: Histogram,
    pub median: Option<u64>,
}

/// Path-length distribution from the `n_sources` nodes of highest in-degree
/// (ties to the lowest id).
pub fn estimate_spl(g: &Graph, n_sources: usize, cap: u32) -> Result<SplEstimate> {
    if n_sources > g.len() {
        return Err(Error::invalid(format!(
            "{n_sources} sources requested from a graph of {} nodes",
            g.len()
        )));
    }
    let mut ids: Vec<NodeId> = g.node_ids().collect();
    ids.sort_by_key(|&n| (std::cmp::Reverse(g.in_degree(n)), n));
    ids.truncate(n_sources);
    let histogram = spl_from_sources(g, &ids, cap)?;
    Ok(SplEstimate {
        sources: ids,
        median: histogram.median(),
        histogram,
    })
}

/// Differences between two snapshots. Articles are matched by title and
/// nodes by title and paragraph index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphDiff {
    pub articles_added: usize,
    pub articles_removed: usize,
    pub nodes_added: usize,
    pub nodes_removed: usize,
    pub common_nodes: usize,
    /// Common nodes whose out-edge set changed.
    pub nodes_changed: usize,
    /// Size of each common node's out-edge symmetric difference.
    pub edge_changes: Histogram,
}

type NodeKey<'a> = (&'a str, u32);

fn edge_sets(g: &Graph) -> BTreeMap<NodeKey<'_>, HashSet<(EdgeType, NodeKey<'_>)>> {
    g.nodes()
        .iter()
        .map(|n| {
            let edges = n
                .out_edges
                .iter()
                .map(|e| {
                    let t = &g.nodes()[e.target.index()];
                    (e.kind, (t.title.as_str(), t.para_index))
                })
                .collect();
            ((n.title.as_str(), n.para_index), edges)
        })
        .collect()
}

pub fn graph_diff(a: &Graph, b: &Graph) -> GraphDiff {
    let titles = |g: &Graph| {
        g.nodes()
            .iter()
            .map(|n| n.title.clone())
            .collect::<HashSet<_>>()
    };
    let (ta, tb) = (titles(a), titles(b));
    let (ea, eb) = (edge_sets(a), edge_sets(b));
    let mut changes: HashMap<NodeKey, u64> = HashMap::new();
    for (k, sa) in &ea {
        if let Some(sb) = eb.get(k) {
            changes.insert(*k, sa.symmetric_difference(sb).count() as u64);
        }
    }
    let common = changes.len();
    GraphDiff {
        articles_added: tb.difference(&ta).count(),
        articles_removed: ta.difference(&tb).count(),
        nodes_added: eb.len() - common,
        nodes_removed: ea.len() - common,
        common_nodes: common,
        nodes_changed: changes.values().filter(|&&c| c > 0).count(),
        edge_changes: Histogram::exact(changes.into_values()),
    }
}
