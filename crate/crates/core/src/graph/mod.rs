//! Immutable navigation graph.
//!
//! Nodes are paragraph-sized text blocks with dense integer ids. Each node owns
//! an ordered list of typed out-edges; the order is the storage order and is
//! what every consumer (samplers, agents, the serializer) iterates over, which
//! keeps everything downstream deterministic. Reverse adjacency is derived
//! lazily on first use and cached.

mod format;

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{dump_jsonl, load, read_graph, save, write_graph, FORMAT_VERSION, MAGIC};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeType {
    Hyperlink,
    Next,
    Prev,
    Mention,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] = [
        EdgeType::Hyperlink,
        EdgeType::Next,
        EdgeType::Prev,
        EdgeType::Mention,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(i as usize).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub kind: EdgeType,
    pub target: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub article_id: u32,
    pub title: String,
    pub para_index: u32,
    pub text: String,
    pub out_edges: Vec<Edge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Sentinel for "not reached" in BFS level arrays.
pub const UNREACHED: u32 = u32::MAX;

#[derive(Debug)]
struct ReverseAdjacency {
    offsets: Vec<usize>,
    sources: Vec<NodeId>,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    first_chunk: HashMap<String, NodeId>,
    reverse: OnceLock<ReverseAdjacency>,
}

impl Clone for Graph {
    fn clone(&self) -> Self {
        Graph::from_nodes(self.nodes.clone())
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
    }
}

impl Graph {
    /// Assembles a graph from nodes whose ids equal their positions. Callers
    /// inside the crate guarantee the invariants; use [`GraphBuilder`] otherwise.
    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        let mut first_chunk = HashMap::new();
        for n in &nodes {
            first_chunk
                .entry(n.title.clone())
                .and_modify(|cur: &mut NodeId| {
                    if n.para_index == 0 {
                        *cur = n.id;
                    }
                })
                .or_insert(n.id);
        }
        Graph {
            nodes,
            first_chunk,
            reverse: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId::from)
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.out_edges.len()).sum()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        id.index() < self.nodes.len()
    }

    pub fn check(&self, id: NodeId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownNode(id))
        }
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id.index()).ok_or(Error::UnknownNode(id))
    }

    /// Out-edges of `id` in storage order.
    pub fn neighbors(&self, id: NodeId) -> Result<&[Edge]> {
        Ok(&self.node(id)?.out_edges)
    }

    #[inline]
    pub(crate) fn out(&self, id: NodeId) -> &[Edge] {
        &self.nodes[id.index()].out_edges
    }

    /// First chunk of the article with this exact title.
    pub fn article_start(&self, title: &str) -> Option<NodeId> {
        self.first_chunk.get(title).copied()
    }

    pub fn label(&self, id: NodeId) -> String {
        match self.nodes.get(id.index()) {
            Some(n) => format!("{} ({})", n.title, n.para_index),
            None => format!("<unknown {id}>"),
        }
    }

    fn reverse_adjacency(&self) -> &ReverseAdjacency {
        self.reverse.get_or_init(|| {
            let n = self.nodes.len();
            let mut lists: Vec<Vec<NodeId>> = vec![Vec::new(); n];
            for node in &self.nodes {
                for e in &node.out_edges {
                    let l = &mut lists[e.target.index()];
                    if l.last() != Some(&node.id) {
                        l.push(node.id);
                    }
                }
            }
            let mut offsets = Vec::with_capacity(n + 1);
            let mut sources = Vec::new();
            offsets.push(0);
            for l in lists {
                sources.extend(l);
                offsets.push(sources.len());
            }
            ReverseAdjacency { offsets, sources }
        })
    }

    /// Distinct in-neighbors of `id`, ascending by id.
    pub fn reverse_neighbors(&self, id: NodeId) -> Result<&[NodeId]> {
        self.check(id)?;
        Ok(self.rev(id))
    }

    #[inline]
    pub(crate) fn rev(&self, id: NodeId) -> &[NodeId] {
        let r = self.reverse_adjacency();
        &r.sources[r.offsets[id.index()]..r.offsets[id.index() + 1]]
    }

    pub fn in_degree(&self, id: NodeId) -> usize {
        self.rev(id).len()
    }

    /// Breadth-first levels from `src`, exploring at most `cap` hops.
    /// Unreached nodes hold [`UNREACHED`].
    pub fn bfs_levels(&self, src: NodeId, cap: u32, dir: Direction) -> Result<Vec<u32>> {
        self.check(src)?;
        let mut level = vec![UNREACHED; self.nodes.len()];
        let mut queue = VecDeque::new();
        level[src.index()] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let lu = level[u.index()];
            if lu >= cap {
                continue;
            }
            let mut visit = |v: NodeId| {
                if level[v.index()] == UNREACHED {
                    level[v.index()] = lu + 1;
                    queue.push_back(v);
                }
            };
            match dir {
                Direction::Forward => self.out(u).iter().for_each(|e| visit(e.target)),
                Direction::Reverse => self.rev(u).iter().copied().for_each(&mut visit),
            }
        }
        Ok(level)
    }

    /// A minimum-edge-count path from `src` to `dst` of at most `cap` edges.
    ///
    /// All edges cost one, so breadth-first search is exact. Among equally short
    /// paths the one discovered first in storage order is returned.
    pub fn shortest_path(&self, src: NodeId, dst: NodeId, cap: u32) -> Result<Option<Vec<NodeId>>> {
        self.check(src)?;
        self.check(dst)?;
        if src == dst {
            return Ok(Some(vec![src]));
        }
        let mut parent = vec![UNREACHED; self.nodes.len()];
        let mut depth = vec![UNREACHED; self.nodes.len()];
        let mut queue = VecDeque::new();
        depth[src.index()] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = depth[u.index()];
            if du >= cap {
                continue;
            }
            for e in self.out(u) {
                let v = e.target;
                if depth[v.index()] != UNREACHED {
                    continue;
                }
                depth[v.index()] = du + 1;
                parent[v.index()] = u.0;
                if v == dst {
                    let mut path = vec![dst];
                    let mut cur = dst;
                    while cur != src {
                        cur = NodeId(parent[cur.index()]);
                        path.push(cur);
                    }
                    path.reverse();
                    return Ok(Some(path));
                }
                queue.push_back(v);
            }
        }
        Ok(None)
    }

    /// Side-by-side copy of several graphs with node and article ids
    /// shifted so that the parts do not overlap.
    pub fn disjoint_union(parts: &[Graph]) -> Graph {
        let mut nodes = Vec::with_capacity(parts.iter().map(Graph::len).sum());
        let mut article_base = 0u32;
        for g in parts {
            let base = nodes.len() as u32;
            let mut next_article = article_base;
            for n in &g.nodes {
                next_article = next_article.max(article_base + n.article_id + 1);
                nodes.push(Node {
                    id: NodeId(n.id.0 + base),
                    article_id: n.article_id + article_base,
                    out_edges: n
                        .out_edges
                        .iter()
                        .map(|e| Edge {
                            kind: e.kind,
                            target: NodeId(e.target.0 + base),
                        })
                        .collect(),
                    ..n.clone()
                });
            }
            article_base = next_article;
        }
        Graph::from_nodes(nodes)
    }

    /// Whether every node is reachable from node 0 when edge directions are
    /// ignored.
    pub fn is_weakly_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![NodeId(0)];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            let fwd = self.out(u).iter().map(|e| e.target);
            let back = self.rev(u).iter().copied();
            for v in fwd.chain(back) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.nodes.len()
    }
}

/// Incremental graph construction.
///
/// Self-loops are dropped and a node keeps at most one edge per target: the
/// first one added wins, so callers add chain edges before hyperlinks and
/// hyperlinks before mentions.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn add_node(
        &mut self,
        article_id: u32,
        title: impl Into<String>,
        para_index: u32,
        text: impl Into<String>,
    ) -> NodeId {
        let id = NodeId::from(self.nodes.len());
        self.nodes.push(Node {
            id,
            article_id,
            title: title.into(),
            para_index,
            text: text.into(),
            out_edges: Vec::new(),
        });
        id
    }

    /// Returns whether the edge was stored.
    pub fn add_edge(&mut self, src: NodeId, kind: EdgeType, target: NodeId) -> Result<bool> {
        if !(src.index() < self.nodes.len()) {
            return Err(Error::UnknownNode(src));
        }
        if !(target.index() < self.nodes.len()) {
            return Err(Error::UnknownNode(target));
        }
        if src == target {
            return Ok(false);
        }
        let edges = &mut self.nodes[src.index()].out_edges;
        if edges.iter().any(|e| e.target == target) {
            return Ok(false);
        }
        edges.push(Edge { kind, target });
        Ok(true)
    }

    pub fn has_edge(&self, src: NodeId, target: NodeId) -> bool {
        self.nodes
            .get(src.index())
            .is_some_and(|n| n.out_edges.iter().any(|e| e.target == target))
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn build(self) -> Graph {
        Graph::from_nodes(self.nodes)
    }
}

#[cfg(test)]
pub(crate) mod test_graphs {
    use super::*;
    use rand::Rng;

    /// Nodes `0..n` with Next edges `i -> i+1`.
    pub fn chain(n: usize) -> Graph {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_node(
                0,
                "chain",
                i as u32,
                format!("paragraph number {i} of the chain"),
            );
        }
        for i in 1..n {
            b.add_edge(NodeId::from(i - 1), EdgeType::Next, NodeId::from(i))
                .unwrap();
        }
        b.build()
    }

    pub fn random(
        n: usize,
        avg_degree: f64,
        rng: &mut impl Rng,
    ) -> (Graph, Vec<(NodeId, EdgeType, NodeId)>) {
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_node(
                i as u32,
                format!("node {i}"),
                0,
                format!("text of node {i}"),
            );
        }
        let p = avg_degree / n as f64;
        let mut stored = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if rng.random::<f64>() < p {
                    let kind = EdgeType::ALL[rng.random_range(0..4)];
                    if b.add_edge(u.into(), kind, v.into()).unwrap() {
                        stored.push((u.into(), kind, v.into()));
                    }
                }
            }
        }
        (b.build(), stored)
    }
}

#[cfg(test)]
mod tests {
    use super::test_graphs::*;
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn neighbors_of_sink_is_empty_and_chain_is_ordered() {
        let g = chain(3);
        assert_eq!(g.neighbors(NodeId(2)).unwrap(), &[]);
        assert_eq!(
            g.neighbors(NodeId(1)).unwrap(),
            &[Edge {
                kind: EdgeType::Next,
                target: NodeId(2)
            }]
        );
        assert!(matches!(
            g.neighbors(NodeId(3)),
            Err(Error::UnknownNode(NodeId(3)))
        ));
    }

    #[test]
    fn disjoint_union_keeps_parts_apart() {
        let u = Graph::disjoint_union(&[chain(3), chain(2)]);
        assert_eq!(u.len(), 5);
        assert_eq!(u.edge_count(), 3);
        assert_eq!(u.neighbors(NodeId(3)).unwrap()[0].target, NodeId(4));
        assert_eq!(u.neighbors(NodeId(2)).unwrap(), &[]);
        assert_ne!(u.nodes()[0].article_id, u.nodes()[3].article_id);
        assert!(!u.is_weakly_connected());
    }

    #[test]
    fn neighbors_reproduce_builder_edges() {
        let mut rng = rng_from(11, &[]);
        let (g, stored) = random(20, 3.0, &mut rng);
        let mut seen: Vec<_> = g
            .node_ids()
            .flat_map(|u| {
                g.neighbors(u)
                    .unwrap()
                    .iter()
                    .map(move |e| (u, e.kind, e.target))
            })
            .collect();
        let mut expected = stored.clone();
        seen.sort();
        expected.sort();
        assert_eq!(seen, expected);
    }

    #[test]
    fn reverse_neighbors_basic() {
        let g = chain(2);
        assert_eq!(g.reverse_neighbors(NodeId(1)).unwrap(), &[NodeId(0)]);
        assert!(g.reverse_neighbors(NodeId(0)).unwrap().is_empty());
        assert!(g.reverse_neighbors(NodeId(5)).is_err());
    }

    #[test]
    fn reverse_is_exact_transpose() {
        let mut rng = rng_from(12, &[]);
        let (g, _) = random(50, 4.0, &mut rng);
        for n in g.node_ids() {
            for m in g.node_ids() {
                let fwd = g.neighbors(n).unwrap().iter().any(|e| e.target == m);
                let back = g.reverse_neighbors(m).unwrap().contains(&n);
                assert_eq!(fwd, back, "{n} -> {m}");
            }
        }
        // transpose of transpose
        let mut tb = GraphBuilder::new();
        for n in g.nodes() {
            tb.add_node(n.article_id, n.title.clone(), n.para_index, n.text.clone());
        }
        for m in g.node_ids() {
            for &n in g.reverse_neighbors(m).unwrap() {
                tb.add_edge(m, EdgeType::Next, n).unwrap();
            }
        }
        let t = tb.build();
        for n in g.node_ids() {
            let mut a: Vec<_> = g.neighbors(n).unwrap().iter().map(|e| e.target).collect();
            let mut b: Vec<_> = t.reverse_neighbors(n).unwrap().to_vec();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn shortest_path_trivial_cases() {
        let g = chain(5);
        assert_eq!(
            g.shortest_path(NodeId(2), NodeId(2), 0).unwrap(),
            Some(vec![NodeId(2)])
        );
        let p = g.shortest_path(NodeId(0), NodeId(4), 10).unwrap().unwrap();
        assert_eq!(p.len() - 1, 4);
        assert_eq!(g.shortest_path(NodeId(0), NodeId(4), 3).unwrap(), None);
        assert_eq!(g.shortest_path(NodeId(4), NodeId(0), 10).unwrap(), None);
        assert!(g.shortest_path(NodeId(0), NodeId(9), 10).is_err());
    }

    #[test]
    fn builder_drops_self_loops_and_duplicate_targets() {
        let mut b = GraphBuilder::new();
        let a = b.add_node(0, "a", 0, "x");
        let c = b.add_node(1, "c", 0, "y");
        assert!(!b.add_edge(a, EdgeType::Hyperlink, a).unwrap());
        assert!(b.add_edge(a, EdgeType::Next, c).unwrap());
        assert!(!b.add_edge(a, EdgeType::Hyperlink, c).unwrap());
        assert!(!b.add_edge(a, EdgeType::Next, c).unwrap());
        let g = b.build();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn weak_connectivity() {
        assert!(chain(4).is_weakly_connected());
        let mut b = GraphBuilder::new();
        b.add_node(0, "a", 0, "");
        b.add_node(1, "b", 0, "");
        assert!(!b.build().is_weakly_connected());
    }
}
