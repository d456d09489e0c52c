//! Compares two snapshots of a wiki that differ by a handful of articles.

use wikinav::ingest::{build_graph, read_corpus, BuildOptions};
use wikinav::stats::graph_diff;

fn main() -> wikinav::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus.jsonl");
    let docs = read_corpus(corpus)?.collect::<wikinav::Result<Vec<_>>>()?;
    let opts = BuildOptions {
        target_words: 40,
        ..BuildOptions::default()
    };
    let (old, _) = build_graph(docs[..2].to_vec(), &opts)?;
    let (new, _) = build_graph(docs.clone(), &opts)?;
    let d = graph_diff(&old, &new);
    println!("{}", serde_json::to_string_pretty(&d)?);
    Ok(())
}
