//! Keyword search over paragraph nodes.
//!
//!     cargo run --example bm25_search -- "otter fur river"

use wikinav::graph::GraphBuilder;
use wikinav::ingest::{build_graph, read_corpus, BuildOptions};
use wikinav::retrieval::{bm25_top_k, Bm25Index};

fn main() -> wikinav::Result<()> {
    let query = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "beavers dam the stream".into());
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus.jsonl");
    let docs = read_corpus(corpus)?.collect::<wikinav::Result<Vec<_>>>()?;
    let (g, _) = build_graph(
        docs,
        &BuildOptions {
            target_words: 40,
            ..BuildOptions::default()
        },
    )?;
    let index = Bm25Index::build(&g)?;
    println!(
        "{} paragraphs, mean length {:.1} tokens",
        index.n_docs(),
        index.avgdl()
    );
    for (n, score) in bm25_top_k(&index, &query, 3)? {
        println!("{score:>7.3}  {}", g.label(n));
    }

    let mut b = GraphBuilder::new();
    b.add_node(0, "", 0, "nothing in common");
    let empty = Bm25Index::build(&b.build())?;
    println!("unmatched query scores {:?}", empty.scores(&query)?);
    Ok(())
}
