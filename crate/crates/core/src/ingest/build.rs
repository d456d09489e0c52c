use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::chunk::{chunk_document, Chunk, RawDocument};
use crate::error::{Error, Result};
use crate::graph::{EdgeType, Graph, GraphBuilder, NodeId};
use crate::text::tokenize;

/// Documents with fewer body characters are excluded.
pub const MIN_BODY_CHARS: usize = 200;

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub target_words: usize,
    pub min_body_chars: usize,
    pub mention_edges: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            target_words: 100,
            min_body_chars: MIN_BODY_CHARS,
            mention_edges: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub documents: usize,
    pub filtered_short: usize,
    pub articles: usize,
    pub nodes: usize,
    pub edges_hyperlink: usize,
    pub edges_next: usize,
    pub edges_prev: usize,
    pub edges_mention: usize,
    pub dropped_links: usize,
}

impl fmt::Display for BuildReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents read      {}", self.documents)?;
        writeln!(f, "filtered (short)    {}", self.filtered_short)?;
        writeln!(f, "articles            {}", self.articles)?;
        writeln!(f, "nodes               {}", self.nodes)?;
        writeln!(f, "edges hyperlink     {}", self.edges_hyperlink)?;
        writeln!(f, "edges next          {}", self.edges_next)?;
        writeln!(f, "edges prev          {}", self.edges_prev)?;
        writeln!(f, "edges mention       {}", self.edges_mention)?;
        writeln!(f, "dropped links       {}", self.dropped_links)
    }
}

/// Streams a JSON-lines corpus. Blank lines are skipped.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<impl Iterator<Item = Result<RawDocument>>> {
    let reader = BufReader::new(File::open(path)?);
    Ok(reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::Io(e))),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(
                serde_json::from_str::<RawDocument>(&l)
                    .map_err(|e| Error::invalid(format!("corpus line {}: {e}", i + 1))),
            ),
        }))
}

struct Article {
    title: String,
    chunks: Vec<Chunk>,
}

/// Builds a navigation graph from a corpus, in corpus order.
pub fn build_graph(
    corpus: impl IntoIterator<Item = RawDocument>,
    opts: &BuildOptions,
) -> Result<(Graph, BuildReport)> {
    let mut report = BuildReport::default();
    let mut seen_titles = HashSet::new();
    let mut kept = Vec::new();
    for doc in corpus {
        report.documents += 1;
        doc.validate()?;
        if !seen_titles.insert(doc.title.clone()) {
            return Err(Error::invalid(format!("duplicate title {:?}", doc.title)));
        }
        if doc.body.chars().count() < opts.min_body_chars {
            report.filtered_short += 1;
            continue;
        }
        kept.push(doc);
    }

    let articles: Vec<Article> = kept
        .par_iter()
        .map(|doc| Article {
            title: doc.title.clone(),
            chunks: chunk_document(doc, opts.target_words),
        })
        .filter(|a| !a.chunks.is_empty())
        .collect();
    report.articles = articles.len();

    let mut b = GraphBuilder::new();
    let mut first_chunk: HashMap<&str, NodeId> = HashMap::new();
    let mut article_nodes = Vec::with_capacity(articles.len());
    for (aid, art) in articles.iter().enumerate() {
        let ids: Vec<NodeId> = art
            .chunks
            .iter()
            .enumerate()
            .map(|(p, c)| b.add_node(aid as u32, art.title.clone(), p as u32, c.text.clone()))
            .collect();
        first_chunk.insert(art.title.as_str(), ids[0]);
        article_nodes.push(ids);
    }
    let lower_first: HashMap<String, NodeId> = first_chunk
        .iter()
        .map(|(t, &id)| (t.to_lowercase(), id))
        .collect();

    let count = |kind: EdgeType, stored: bool, r: &mut BuildReport| {
        if stored {
            match kind {
                EdgeType::Hyperlink => r.edges_hyperlink += 1,
                EdgeType::Next => r.edges_next += 1,
                EdgeType::Prev => r.edges_prev += 1,
                EdgeType::Mention => r.edges_mention += 1,
            }
        }
    };

    for ids in &article_nodes {
        for w in ids.windows(2) {
            let s = b.add_edge(w[0], EdgeType::Next, w[1])?;
            count(EdgeType::Next, s, &mut report);
            let s = b.add_edge(w[1], EdgeType::Prev, w[0])?;
            count(EdgeType::Prev, s, &mut report);
        }
    }

    for (art, ids) in articles.iter().zip(&article_nodes) {
        for (chunk, &src) in art.chunks.iter().zip(ids) {
            for link in &chunk.links {
                let target = first_chunk
                    .get(link.target_title.as_str())
                    .or_else(|| lower_first.get(&link.target_title.to_lowercase()));
                match target {
                    Some(&t) => {
                        let s = b.add_edge(src, EdgeType::Hyperlink, t)?;
                        count(EdgeType::Hyperlink, s, &mut report);
                    }
                    None => report.dropped_links += 1,
                }
            }
        }
    }

    if opts.mention_edges {
        // multi-word titles keyed by their first token
        let mut by_first: HashMap<String, Vec<(Vec<String>, usize)>> = HashMap::new();
        for (aid, art) in articles.iter().enumerate() {
            let toks = tokenize(&art.title);
            if toks.len() >= 2 {
                by_first
                    .entry(toks[0].clone())
                    .or_default()
                    .push((toks, aid));
            }
        }
        let mentions: Vec<Vec<(NodeId, usize)>> = articles
            .par_iter()
            .zip(article_nodes.par_iter())
            .enumerate()
            .map(|(aid, (art, ids))| {
                let mut found = Vec::new();
                for (chunk, &src) in art.chunks.iter().zip(ids) {
                    let toks = tokenize(&chunk.text);
                    for i in 0..toks.len() {
                        let Some(cands) = by_first.get(&toks[i]) else {
                            continue;
                        };
                        for (title, target_aid) in cands {
                            if *target_aid != aid && toks[i..].starts_with(title) {
                                found.push((src, *target_aid));
                            }
                        }
                    }
                }
                found
            })
            .collect();
        for (src, target_aid) in mentions.into_iter().flatten() {
            let s = b.add_edge(src, EdgeType::Mention, article_nodes[target_aid][0])?;
            count(EdgeType::Mention, s, &mut report);
        }
    }

    report.nodes = b.len();
    Ok((b.build(), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::chunk::Link;

    fn long_text(seed: &str, words: usize) -> String {
        (0..words)
            .map(|i| format!("{seed}{i}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn doc(title: &str, body: String, links: Vec<Link>) -> RawDocument {
        RawDocument {
            doc_id: title.to_lowercase(),
            title: title.into(),
            body,
            links,
        }
    }

    #[test]
    fn short_documents_are_filtered() {
        let d = doc("Tiny", "x".repeat(150), vec![]);
        let (g, r) = build_graph([d], &BuildOptions::default()).unwrap();
        assert!(g.is_empty());
        assert_eq!(r.filtered_short, 1);
    }

    #[test]
    fn two_chunk_article_is_chained() {
        let d = doc("Long", long_text("a", 200), vec![]);
        let (g, r) = build_graph([d], &BuildOptions::default()).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.neighbors(NodeId(0)).unwrap()[0].kind, EdgeType::Next);
        assert_eq!(g.neighbors(NodeId(0)).unwrap()[0].target, NodeId(1));
        assert_eq!(g.neighbors(NodeId(1)).unwrap()[0].kind, EdgeType::Prev);
        assert_eq!(g.neighbors(NodeId(1)).unwrap()[0].target, NodeId(0));
        assert_eq!((r.edges_next, r.edges_prev), (1, 1));
    }

    #[test]
    fn hyperlink_targets_first_chunk_and_unknown_targets_are_counted() {
        let a = doc(
            "Alpha",
            long_text("a", 60),
            vec![
                Link {
                    target_title: "Beta".into(),
                    char_start: 10,
                    char_end: 18,
                },
                Link {
                    target_title: "Missing".into(),
                    char_start: 20,
                    char_end: 25,
                },
            ],
        );
        let b = doc("Beta", long_text("b", 250), vec![]);
        let (g, r) = build_graph([a, b], &BuildOptions::default()).unwrap();
        let beta0 = g.article_start("Beta").unwrap();
        assert_eq!(g.node(beta0).unwrap().para_index, 0);
        assert!(g
            .neighbors(NodeId(0))
            .unwrap()
            .iter()
            .any(|e| e.kind == EdgeType::Hyperlink && e.target == beta0));
        assert_eq!(r.dropped_links, 1);
        assert_eq!(r.edges_hyperlink, 1);
    }

    #[test]
    fn mentions_of_multiword_titles_become_edges() {
        let a = doc(
            "Alpha",
            format!("{} we discuss new york city here", long_text("a", 60)),
            vec![],
        );
        let b = doc("New York City", long_text("b", 60), vec![]);
        let c = doc("York", format!("{} york again", long_text("c", 60)), vec![]);
        let (g, r) = build_graph([a, b, c], &BuildOptions::default()).unwrap();
        let nyc = g.article_start("New York City").unwrap();
        let york = g.article_start("York").unwrap();
        let a_edges = g.neighbors(NodeId(0)).unwrap();
        assert!(a_edges
            .iter()
            .any(|e| e.kind == EdgeType::Mention && e.target == nyc));
        // single-word titles never produce mentions
        assert!(!a_edges.iter().any(|e| e.target == york));
        assert_eq!(r.edges_mention, 1);
    }

    #[test]
    fn duplicate_titles_are_rejected() {
        let a = doc("Same", long_text("a", 60), vec![]);
        let b = doc("Same", long_text("b", 60), vec![]);
        assert!(build_graph([a, b], &BuildOptions::default()).is_err());
    }

    #[test]
    fn next_and_prev_edges_pair_up() {
        let docs: Vec<_> = (0..4)
            .map(|i| doc(&format!("D{i}"), long_text("w", 100 + 90 * i), vec![]))
            .collect();
        let (g, _) = build_graph(docs, &BuildOptions::default()).unwrap();
        for n in g.node_ids() {
            for e in g.neighbors(n).unwrap() {
                let back = match e.kind {
                    EdgeType::Next => EdgeType::Prev,
                    EdgeType::Prev => EdgeType::Next,
                    _ => continue,
                };
                assert!(g
                    .neighbors(e.target)
                    .unwrap()
                    .iter()
                    .any(|f| f.kind == back && f.target == n));
            }
        }
    }
}
