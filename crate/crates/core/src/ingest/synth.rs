//! Seeded synthetic hyperlink graphs.
//!
//! The generator models a small encyclopedia. A fixed "world" (derived only
//! from the vocabulary size and topic count, so graphs built with different
//! seeds share a language) gives every topic its own words and its own slice
//! of a keyword lexicon, and fixes which other topics each topic links to.
//! Linked topics share no words, so finding a route between topics takes
//! knowledge of the world rather than text overlap.
//!
//! A seeded instance places every article at a random point on its topic's
//! circle and gives it a two-word name, keywords from the lexicon near that
//! point and a popularity weight. Paragraphs mix topic words, keywords, the
//! article name, words tied to the paragraph's position and filler.
//! Hyperlinks inside a topic prefer popular articles close on the circle,
//! with a weight falling off as a power of the distance; the rest go to
//! popular articles of linked topics. Most links sit in an article's first
//! paragraph. The linking paragraph carries the target's name as anchor text
//! together with a few of its keywords.
//!
//! A fraction of articles are single-paragraph stubs that nothing links to,
//! which gives the graph nodes with no in-edges.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeType, Graph, GraphBuilder, NodeId};
use crate::rng::{rng_from, stream, NavRng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_articles: usize,
    pub paras_per_article: usize,
    pub vocab_size: usize,
    pub n_topics: usize,
    /// Expected hyperlinks per paragraph into the paragraph's own topic.
    pub intra_links: f64,
    /// Expected hyperlinks per paragraph into linked topics.
    pub cross_links: f64,
    /// Within a topic, link weight falls off as distance^-exponent.
    pub distance_exponent: f64,
    /// Share of an article's links placed in its first paragraph; the rest
    /// are spread evenly over the others.
    pub lead_share: f64,
    /// Pareto tail index of article popularity (> 1). Smaller values
    /// concentrate links on a few hub articles.
    pub popularity_tail: f64,
    /// Target keywords written next to each anchor.
    pub anchor_context: usize,
    /// Fraction of articles generated as unlinked single-paragraph stubs.
    pub stub_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_articles: 100,
            paras_per_article: 5,
            vocab_size: 2000,
            n_topics: 10,
            intra_links: 3.0,
            cross_links: 4.0,
            distance_exponent: 1.0,
            lead_share: 0.3,
            popularity_tail: 3.0,
            anchor_context: 3,
            stub_fraction: 0.15,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// About 2,000 nodes in 20 topics.
    pub fn benchmark(seed: u64) -> Self {
        SynthSpec {
            n_articles: 450,
            n_topics: 20,
            seed,
            ..SynthSpec::default()
        }
    }

    /// About 1,000 nodes.
    pub fn fixture_1k(seed: u64) -> Self {
        SynthSpec {
            n_articles: 225,
            n_topics: 10,
            seed,
            ..SynthSpec::benchmark(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_articles == 0 || self.paras_per_article == 0 || self.n_topics == 0 {
            return Err(Error::invalid("synthetic spec counts must be positive"));
        }
        if self.vocab_size < 8 * self.n_topics + 2 * SECTIONS {
            return Err(Error::invalid("vocabulary too small for the topic count"));
        }
        let rates = [self.intra_links, self.cross_links, self.distance_exponent];
        if rates.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::invalid(
                "link rates and distance exponent must be non-negative",
            ));
        }
        if !(self.popularity_tail > 1.0) || !self.popularity_tail.is_finite() {
            return Err(Error::invalid("popularity tail index must exceed 1"));
        }
        if !(0.0..=1.0).contains(&self.stub_fraction) || !(0.0..=1.0).contains(&self.lead_share) {
            return Err(Error::invalid(
                "stub fraction and lead share must lie in [0, 1]",
            ));
        }
        Ok(())
    }
}

/// Distinct paragraph positions with their own vocabulary; later
/// paragraphs reuse the last one.
const SECTIONS: usize = 8;
const KEYWORDS: usize = 6;
/// Keywords are drawn from this many lexicon slots either side of an
/// article's point.
const KEYWORD_WINDOW: usize = 3;
/// Word probabilities in running text: topic word, keyword, name part,
/// section word. Filler takes the rest.
const WORD_MIX: (f64, f64, f64, f64) = (0.3, 0.25, 0.05, 0.2);
/// Linked topics per topic, besides the next one round the ring.
const TOPIC_CHORDS: usize = 2;

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh",
];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];

/// Deterministic pronounceable word for an index; distinct indices give
/// distinct words.
fn word(mut i: usize, min_syllables: usize) -> String {
    let base = ONSETS.len() * VOWELS.len();
    let mut out = String::new();
    let mut n = 0;
    while n < min_syllables || i > 0 {
        let d = i % base;
        i /= base;
        out.push_str(ONSETS[d / VOWELS.len()]);
        out.push_str(VOWELS[d % VOWELS.len()]);
        n += 1;
    }
    out
}

/// The seed-independent part of a synthetic corpus.
#[derive(Clone, Debug)]
pub struct World {
    pub topic_words: Vec<Vec<String>>,
    /// Words shared by the paragraphs at one position across all articles,
    /// playing the part of recurring section headings.
    pub section_words: Vec<Vec<String>>,
    /// Keyword lexicon of each topic, laid out round its circle.
    pub lexicon: Vec<Vec<String>>,
    pub filler: Vec<String>,
    /// Topics each topic links to: the next one round a ring plus a few
    /// fixed random chords.
    pub topic_links: Vec<Vec<usize>>,
}

impl World {
    pub fn new(vocab_size: usize, n_topics: usize) -> Self {
        let per_topic = (vocab_size / (4 * n_topics)).max(4);
        let topic_words = (0..n_topics)
            .map(|t| (0..per_topic).map(|j| word(t * per_topic + j, 2)).collect())
            .collect();
        let rest: Vec<String> = (n_topics * per_topic
            ..vocab_size.max(n_topics * per_topic + SECTIONS + 2))
            .map(|i| word(i, 2))
            .collect();
        let per_section = (rest.len() / (4 * SECTIONS)).clamp(1, 12);
        let section_words = (0..SECTIONS)
            .map(|k| rest[k * per_section..(k + 1) * per_section].to_vec())
            .collect();
        let rest = &rest[SECTIONS * per_section..];
        let slice = (rest.len() * 3 / 4 / n_topics).max(1);
        let lexicon = (0..n_topics)
            .map(|t| rest[t * slice..(t + 1) * slice].to_vec())
            .collect();
        let filler = rest[(n_topics * slice).min(rest.len() - 1)..].to_vec();
        let mut rng = rng_from(vocab_size as u64, &[stream::SYNTH, n_topics as u64]);
        let topic_links = (0..n_topics)
            .map(|t| {
                let mut v = vec![(t + 1) % n_topics];
                let mut others: Vec<usize> = (0..n_topics)
                    .filter(|&u| u != t && !v.contains(&u))
                    .collect();
                others.shuffle(&mut rng);
                v.extend(others.into_iter().take(TOPIC_CHORDS));
                v.retain(|&u| u != t);
                v
            })
            .collect();
        World {
            topic_words,
            section_words,
            lexicon,
            filler,
            topic_links,
        }
    }
}

struct Article {
    title: String,
    name: [String; 2],
    topic: usize,
    /// Point on the topic's circle.
    position: f64,
    keywords: Vec<String>,
    popularity: f64,
    paragraphs: usize,
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn sentence(
    rng: &mut NavRng,
    world: &World,
    art: &Article,
    para: usize,
    len: usize,
) -> Vec<String> {
    let topic = &world.topic_words[art.topic];
    let section = &world.section_words[para.min(SECTIONS - 1)];
    let (pt, pk, pn, ps) = WORD_MIX;
    (0..len)
        .map(|_| {
            let r: f64 = rng.random();
            if r < pt {
                topic.choose(rng).unwrap().clone()
            } else if r < pt + pk {
                art.keywords.choose(rng).unwrap().clone()
            } else if r < pt + pk + pn {
                art.name[rng.random_range(0..2)].clone()
            } else if r < pt + pk + pn + ps {
                section.choose(rng).unwrap().clone()
            } else {
                world.filler.choose(rng).unwrap().clone()
            }
        })
        .collect()
}

fn ring_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Share of an article's links placed in paragraph `para`.
fn link_share(spec: &SynthSpec, paragraphs: usize, para: usize) -> f64 {
    if paragraphs == 1 {
        return 1.0;
    }
    let lead = spec.lead_share.max(1.0 / paragraphs as f64);
    if para == 0 {
        lead
    } else {
        (1.0 - lead) / (paragraphs - 1) as f64
    }
}

/// Generates a synthetic graph. Deterministic in `spec`.
pub fn synth_graph(spec: &SynthSpec) -> Result<Graph> {
    spec.validate()?;
    let world = World::new(spec.vocab_size, spec.n_topics);
    let mut rng = rng_from(spec.seed, &[stream::SYNTH]);
    let n = spec.n_articles;

    let n_stubs = (n as f64 * spec.stub_fraction).floor() as usize;
    let mut is_stub = vec![false; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    for &a in order.iter().take(n_stubs) {
        is_stub[a] = true;
    }

    let name_space = (n * 40).max(1000);
    let mut used = HashSet::new();
    let mut articles = Vec::with_capacity(n);
    for (a, &stub) in is_stub.iter().enumerate() {
        let name = loop {
            let pair = [
                capitalize(&word(rng.random_range(0..name_space) + spec.vocab_size, 2)),
                capitalize(&word(rng.random_range(0..name_space) + spec.vocab_size, 2)),
            ];
            if pair[0] != pair[1] && used.insert(pair.clone()) {
                break pair;
            }
        };
        let topic = a % spec.n_topics;
        let position: f64 = rng.random();
        let lex = &world.lexicon[topic];
        let m = lex.len();
        let center = (position * m as f64) as usize;
        let keywords = (0..KEYWORDS)
            .map(|_| {
                let off = rng.random_range(0..=2 * KEYWORD_WINDOW);
                lex[(center + m * (KEYWORD_WINDOW + 1) + off - KEYWORD_WINDOW) % m].clone()
            })
            .collect();
        // Pareto popularity scaled to mean one
        let u: f64 = 1.0 - rng.random::<f64>();
        let alpha = spec.popularity_tail;
        let popularity = if stub {
            0.0
        } else {
            u.powf(-1.0 / alpha) * (alpha - 1.0) / alpha
        };
        articles.push(Article {
            title: format!("{} {}", name[0], name[1]),
            name: [name[0].to_lowercase(), name[1].to_lowercase()],
            topic,
            position,
            keywords,
            popularity,
            paragraphs: if stub { 1 } else { spec.paras_per_article },
        });
    }

    let mut by_topic: Vec<Vec<usize>> = vec![Vec::new(); spec.n_topics];
    for (a, art) in articles.iter().enumerate() {
        by_topic[art.topic].push(a);
    }
    let min_dist = 0.5 * spec.n_topics as f64 / n as f64;

    // per paragraph: sentences and outgoing article links
    let mut paragraphs: Vec<(usize, Vec<Vec<String>>, Vec<usize>)> = Vec::new();
    for (a, art) in articles.iter().enumerate() {
        let intra: Vec<(usize, f64)> = by_topic[art.topic]
            .iter()
            .filter(|&&b| b != a)
            .map(|&b| {
                let d = ring_distance(art.position, articles[b].position).max(min_dist);
                (b, articles[b].popularity * d.powf(-spec.distance_exponent))
            })
            .collect();
        let cross: Vec<(usize, f64)> = world.topic_links[art.topic]
            .iter()
            .flat_map(|&t| by_topic[t].iter().map(|&b| (b, articles[b].popularity)))
            .collect();
        let per_article = art.paragraphs as f64;
        for para in 0..art.paragraphs {
            let n_sent = rng.random_range(4..=7);
            let mut sents: Vec<Vec<String>> = (0..n_sent)
                .map(|_| {
                    let len = rng.random_range(8..=14);
                    sentence(&mut rng, &world, art, para, len)
                })
                .collect();
            let share = per_article * link_share(spec, art.paragraphs, para);
            let mut links = Vec::new();
            for (cands, rate) in [(&intra, spec.intra_links), (&cross, spec.cross_links)] {
                let total: f64 = cands.iter().map(|c| c.1).sum();
                if total <= 0.0 {
                    continue;
                }
                let scale = rate * share / total;
                for &(b, w) in cands.iter() {
                    if rng.random::<f64>() < w * scale {
                        links.push(b);
                    }
                }
            }
            links.shuffle(&mut rng);
            for &b in &links {
                let s = rng.random_range(0..sents.len());
                let pos = rng.random_range(0..=sents[s].len());
                // one element, so later anchors never land inside it
                sents[s].insert(pos, articles[b].name.join(" "));
                for _ in 0..spec.anchor_context {
                    let pos = rng.random_range(0..=sents[s].len());
                    sents[s].insert(pos, articles[b].keywords.choose(&mut rng).unwrap().clone());
                }
            }
            paragraphs.push((a, sents, links));
        }
    }

    let mut builder = GraphBuilder::new();
    let mut first = Vec::with_capacity(articles.len());
    let mut para_of = Vec::new();
    let mut cur_article = usize::MAX;
    let mut para_index = 0;
    for (a, sents, _) in &paragraphs {
        if *a != cur_article {
            cur_article = *a;
            para_index = 0;
        }
        let text = sents
            .iter()
            .map(|s| {
                let mut s = s.join(" ");
                s = capitalize(&s);
                s.push('.');
                s
            })
            .collect::<Vec<_>>()
            .join(" ");
        let id = builder.add_node(*a as u32, articles[*a].title.clone(), para_index, text);
        if para_index == 0 {
            first.push(id);
        }
        para_of.push(id);
        para_index += 1;
    }
    for (i, (a, _, _)) in paragraphs.iter().enumerate() {
        if i + 1 < paragraphs.len() && paragraphs[i + 1].0 == *a {
            builder.add_edge(para_of[i], EdgeType::Next, para_of[i + 1])?;
            builder.add_edge(para_of[i + 1], EdgeType::Prev, para_of[i])?;
        }
    }
    for (i, (_, _, links)) in paragraphs.iter().enumerate() {
        for &b in links {
            builder.add_edge(para_of[i], EdgeType::Hyperlink, first[b])?;
        }
    }

    let g = builder.build();
    if g.is_weakly_connected() {
        Ok(g)
    } else {
        Ok(connect_components(g))
    }
}

/// Fallback for disconnected instances: joins consecutive weak components
/// with a Next/Prev pair between the last node of one and the first node of
/// the next.
fn connect_components(g: Graph) -> Graph {
    let n = g.len();
    let mut comp = vec![usize::MAX; n];
    let mut reps: Vec<(NodeId, NodeId)> = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let c = reps.len();
        let mut stack = vec![NodeId::from(s)];
        comp[s] = c;
        let (mut lo, mut hi) = (s, s);
        while let Some(u) = stack.pop() {
            lo = lo.min(u.index());
            hi = hi.max(u.index());
            let fwd = g.out(u).iter().map(|e| e.target);
            for v in fwd.chain(g.rev(u).iter().copied()) {
                if comp[v.index()] == usize::MAX {
                    comp[v.index()] = c;
                    stack.push(v);
                }
            }
        }
        reps.push((NodeId::from(lo), NodeId::from(hi)));
    }
    let mut nodes = g.nodes().to_vec();
    for w in reps.windows(2) {
        let (last, first) = (w[0].1, w[1].0);
        nodes[last.index()].out_edges.push(crate::graph::Edge {
            kind: EdgeType::Next,
            target: first,
        });
        nodes[first.index()].out_edges.push(crate::graph::Edge {
            kind: EdgeType::Prev,
            target: last,
        });
    }
    Graph::from_nodes(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::write_graph;

    #[test]
    fn single_article_is_a_chain() {
        let spec = SynthSpec {
            n_articles: 1,
            paras_per_article: 3,
            ..SynthSpec::default()
        };
        let g = synth_graph(&spec).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edge_count(), 4);
        assert!(g
            .nodes()
            .iter()
            .flat_map(|n| &n.out_edges)
            .all(|e| matches!(e.kind, EdgeType::Next | EdgeType::Prev)));
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SynthSpec::default();
        let a = write_graph(&synth_graph(&spec).unwrap());
        let b = write_graph(&synth_graph(&spec).unwrap());
        assert_eq!(a, b);
        let other = write_graph(&synth_graph(&SynthSpec { seed: 1, ..spec }).unwrap());
        assert_ne!(a, other);
    }

    #[test]
    fn benchmark_graph_shape() {
        let g = synth_graph(&SynthSpec::benchmark(0)).unwrap();
        assert!((1900..=2100).contains(&g.len()), "{}", g.len());
        assert!(g.is_weakly_connected());
        let no_in = g.node_ids().filter(|&n| g.in_degree(n) == 0).count();
        assert!(no_in > 0);
        // every hyperlink target's name appears in the source text
        for n in g.nodes() {
            let text = n.text.to_lowercase();
            for e in n.out_edges.iter().filter(|e| e.kind == EdgeType::Hyperlink) {
                let name = g.node(e.target).unwrap().title.to_lowercase();
                assert!(text.contains(&name), "{name} missing from node {}", n.id);
            }
        }
    }

    #[test]
    fn disconnected_instances_are_joined() {
        let spec = SynthSpec {
            n_articles: 12,
            intra_links: 0.0,
            cross_links: 0.0,
            ..SynthSpec::default()
        };
        let g = synth_graph(&spec).unwrap();
        assert!(g.is_weakly_connected());
    }

    #[test]
    fn words_are_distinct() {
        let w: HashSet<String> = (0..5000).map(|i| word(i, 2)).collect();
        assert_eq!(w.len(), 5000);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(synth_graph(&SynthSpec {
            n_articles: 0,
            ..SynthSpec::default()
        })
        .is_err());
        assert!(synth_graph(&SynthSpec {
            popularity_tail: 1.0,
            ..SynthSpec::default()
        })
        .is_err());
    }
}
