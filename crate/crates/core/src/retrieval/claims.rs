use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Direction, Graph, NodeId};
use crate::rng::{rng_from, stream};
use crate::text::{split_sentences, tokenize};

/// A claim or question with its gold evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub gold_sentences: Vec<String>,
    #[serde(default, rename = "gold_node_ids")]
    pub gold_nodes: Vec<NodeId>,
}

/// Reads one JSON claim per line; blank lines are skipped.
pub fn read_claims(path: impl AsRef<Path>) -> Result<Vec<Claim>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let c: Claim = serde_json::from_str(&line)
            .map_err(|e| Error::invalid(format!("claims line {}: {e}", i + 1)))?;
        if c.text.trim().is_empty() {
            return Err(Error::invalid(format!("claims line {}: empty text", i + 1)));
        }
        out.push(c);
    }
    Ok(out)
}

pub fn write_claims(claims: &[Claim], mut out: impl Write) -> Result<()> {
    for c in claims {
        serde_json::to_writer(&mut out, c)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Synthetic claims: each pairs one sentence of a gold node with the title
/// of an article a fixed number of hops upstream, so that a keyword search
/// lands near the evidence but not on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimSpec {
    pub n_claims: usize,
    /// The claim opens with the title of an article whose node is exactly
    /// this many links upstream of the gold node; 0 names no article.
    pub hops: usize,
    /// Fraction of the gold sentence's remaining words kept in the claim.
    pub keep: f64,
    /// Words found in fewer than this share of nodes are left out, so the
    /// claim does not name its evidence by rare terms.
    pub min_df: f64,
    pub seed: u64,
}

impl Default for ClaimSpec {
    fn default() -> Self {
        ClaimSpec {
            n_claims: 200,
            hops: 4,
            keep: 0.6,
            min_df: 0.0,
            seed: 0,
        }
    }
}

const CLAIM_ATTEMPTS: usize = 100;

/// Builds claims over `g`. The claim text is the upstream title followed by
/// a random subset of the gold sentence's words, leaving out the words of
/// the gold article's own title and those rarer than `min_df`.
pub fn synth_claims(g: &Graph, spec: &ClaimSpec) -> Result<Vec<Claim>> {
    if g.is_empty() || !(spec.keep > 0.0 && spec.keep <= 1.0) {
        return Err(Error::invalid(
            "claims need a non-empty graph and keep in (0, 1]",
        ));
    }
    if !(0.0..=1.0).contains(&spec.min_df) {
        return Err(Error::invalid("min_df must lie in [0, 1]"));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for n in g.nodes() {
        for w in tokenize(&n.text).into_iter().collect::<HashSet<_>>() {
            *df.entry(w).or_default() += 1;
        }
    }
    let min_count = spec.min_df * g.len() as f64;
    let common: HashSet<String> = df
        .into_iter()
        .filter(|&(_, c)| c as f64 >= min_count)
        .map(|(w, _)| w)
        .collect();
    (0..spec.n_claims)
        .map(|i| {
            let mut rng = rng_from(spec.seed, &[stream::CLAIMS, i as u64]);
            for _ in 0..CLAIM_ATTEMPTS {
                if let Some(c) = try_claim(g, spec, &common, i, &mut rng)? {
                    return Ok(c);
                }
            }
            Err(Error::invalid(format!(
                "no node has an upstream article {} hops away",
                spec.hops
            )))
        })
        .collect()
}

fn try_claim(
    g: &Graph,
    spec: &ClaimSpec,
    common: &HashSet<String>,
    i: usize,
    rng: &mut impl Rng,
) -> Result<Option<Claim>> {
    let gold = NodeId::from(rng.random_range(0..g.len()));
    let node = g.node(gold)?;
    let sentences = split_sentences(&node.text);
    let Some(sentence) = sentences.choose(rng) else {
        return Ok(None);
    };
    let mention = if spec.hops == 0 {
        None
    } else {
        let levels = g.bfs_levels(gold, spec.hops as u32, Direction::Reverse)?;
        let starts: Vec<usize> = (0..g.len())
            .filter(|&n| levels[n] == spec.hops as u32)
            .collect();
        let Some(&start) = starts.choose(rng) else {
            return Ok(None);
        };
        Some(g.node(NodeId::from(start))?.title.clone())
    };
    let own: HashSet<String> = tokenize(&node.title).into_iter().collect();
    let mut words: Vec<String> = tokenize(sentence)
        .into_iter()
        .filter(|w| !own.contains(w) && common.contains(w))
        .collect();
    words.shuffle(rng);
    words.truncate(((words.len() as f64 * spec.keep).ceil() as usize).max(1));
    if words.is_empty() {
        return Ok(None);
    }
    Ok(Some(Claim {
        id: format!("claim-{i}"),
        text: match mention {
            Some(m) => format!("{m} {}", words.join(" ")),
            None => words.join(" "),
        },
        gold_sentences: vec![sentence.clone()],
        gold_nodes: vec![gold],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{synth_graph, SynthSpec};

    #[test]
    fn jsonl_round_trip() {
        let claims = vec![Claim {
            id: "a".into(),
            text: "Some claim".into(),
            gold_sentences: vec!["x y z".into()],
            gold_nodes: vec![NodeId(3)],
        }];
        let mut buf = Vec::new();
        write_claims(&claims, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.jsonl");
        std::fs::write(&p, &buf).unwrap();
        assert_eq!(read_claims(&p).unwrap(), claims);
        std::fs::write(&p, "{\"id\":\"b\",\"text\":\"q\",\"gold_sentences\":[]}\n").unwrap();
        assert!(read_claims(&p).unwrap()[0].gold_nodes.is_empty());
    }

    #[test]
    fn gold_sits_at_the_requested_distance() {
        let g = synth_graph(&SynthSpec::fixture_1k(3)).unwrap();
        let spec = ClaimSpec {
            n_claims: 20,
            ..ClaimSpec::default()
        };
        let claims = synth_claims(&g, &spec).unwrap();
        assert_eq!(claims, synth_claims(&g, &spec).unwrap());
        for c in &claims {
            let gold = c.gold_nodes[0];
            assert!(g.node(gold).unwrap().text.contains(&c.gold_sentences[0]));
            let exact = g
                .nodes()
                .iter()
                .filter(|n| c.text.starts_with(&n.title))
                .filter_map(|n| g.shortest_path(n.id, gold, 10).unwrap())
                .any(|p| p.len() - 1 == spec.hops);
            assert!(exact, "{}", c.id);
        }
    }
}
