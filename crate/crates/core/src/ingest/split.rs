use std::collections::VecDeque;

use crate::graph::{Edge, Graph, Node, NodeId};

/// Ranks nodes by in-degree, highest first (ties: lower id first). Rank 1 is
/// the first element.
fn in_degree_ranking(g: &Graph) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = g.node_ids().collect();
    order.sort_by_key(|&n| (std::cmp::Reverse(g.in_degree(n)), n));
    order
}

/// Splits a graph into node-disjoint train and eval graphs.
///
/// Nodes of odd in-degree rank are train candidates, even ranks eval
/// candidates. Each side starts from its best-ranked node and repeatedly
/// absorbs same-parity nodes adjacent (in either direction) to what it
/// already holds, until nothing new is reachable or `max_nodes` is hit.
/// Only edges between retained nodes survive; nodes are renumbered in their
/// original order.
pub fn split_disjoint(g: &Graph, max_nodes: Option<usize>) -> (Graph, Graph) {
    let ranking = in_degree_ranking(g);
    let mut parity = vec![0u8; g.len()];
    for (r, &n) in ranking.iter().enumerate() {
        // r is zero-based, so even r means odd rank
        parity[n.index()] = (r % 2) as u8;
    }
    let grow = |p: u8| -> Graph {
        let Some(&seed) = ranking.get(p as usize) else {
            return Graph::default();
        };
        let cap = max_nodes.unwrap_or(usize::MAX);
        let mut keep = vec![false; g.len()];
        let mut taken = 1;
        keep[seed.index()] = true;
        let mut queue = VecDeque::from([seed]);
        'outer: while let Some(u) = queue.pop_front() {
            let adjacent = g
                .out(u)
                .iter()
                .map(|e| e.target)
                .chain(g.rev(u).iter().copied());
            for v in adjacent {
                if taken >= cap {
                    break 'outer;
                }
                if parity[v.index()] == p && !keep[v.index()] {
                    keep[v.index()] = true;
                    taken += 1;
                    queue.push_back(v);
                }
            }
        }
        induced(g, &keep)
    };
    (grow(0), grow(1))
}

/// Subgraph on the marked nodes, renumbered in original order.
pub fn induced(g: &Graph, keep: &[bool]) -> Graph {
    let mut new_id = vec![None; g.len()];
    let mut next = 0u32;
    for (i, &k) in keep.iter().enumerate() {
        if k {
            new_id[i] = Some(NodeId(next));
            next += 1;
        }
    }
    let nodes = g
        .nodes()
        .iter()
        .filter(|n| keep[n.id.index()])
        .map(|n| Node {
            id: new_id[n.id.index()].unwrap(),
            article_id: n.article_id,
            title: n.title.clone(),
            para_index: n.para_index,
            text: n.text.clone(),
            out_edges: n
                .out_edges
                .iter()
                .filter_map(|e| {
                    new_id[e.target.index()].map(|t| Edge {
                        kind: e.kind,
                        target: t,
                    })
                })
                .collect(),
        })
        .collect();
    Graph::from_nodes(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_graphs;
    use crate::ingest::synth::{synth_graph, SynthSpec};
    use crate::rng::rng_from;
    use std::collections::HashSet;

    fn texts(g: &Graph) -> HashSet<String> {
        g.nodes()
            .iter()
            .map(|n| format!("{}#{}", n.title, n.para_index))
            .collect()
    }

    #[test]
    fn two_nodes_split_one_each() {
        let (a, b) = split_disjoint(&test_graphs::chain(2), None);
        assert_eq!((a.len(), b.len()), (1, 1));
        assert_eq!(a.edge_count() + b.edge_count(), 0);
    }

    #[test]
    fn sides_are_disjoint_on_random_graphs() {
        for seed in 0..20 {
            let (g, _) = test_graphs::random(60, 3.0, &mut rng_from(seed, &[]));
            let (a, b) = split_disjoint(&g, None);
            assert!(texts(&a).is_disjoint(&texts(&b)));
            assert!(a.len() + b.len() <= g.len());
        }
    }

    #[test]
    fn synthetic_split_sides_are_connected() {
        let g = synth_graph(&SynthSpec::benchmark(3)).unwrap();
        let (a, b) = split_disjoint(&g, None);
        assert!(a.len() + b.len() <= g.len());
        assert!(a.len() > 1 && b.len() > 1);
        assert!(a.is_weakly_connected() && b.is_weakly_connected());
        assert!(texts(&a).is_disjoint(&texts(&b)));
    }

    #[test]
    fn size_cap_is_respected() {
        let g = synth_graph(&SynthSpec::benchmark(3)).unwrap();
        let (a, b) = split_disjoint(&g, Some(100));
        assert_eq!((a.len(), b.len()), (100, 100));
        assert!(a.is_weakly_connected());
    }
}
