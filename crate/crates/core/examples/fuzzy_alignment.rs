//! Token-set similarity and aligning an evidence sentence to graph nodes.

use wikinav::ingest::{build_graph, read_corpus, BuildOptions};
use wikinav::retrieval::{align_evidence, ratio, token_set_ratio, MATCH_THRESHOLD};

fn main() -> wikinav::Result<()> {
    for (a, b) in [
        ("the river otter", "otter river the"),
        (
            "a beaver pond forms",
            "a beaver pond forms when beavers dam a stream",
        ),
        ("railway to the coast", "glacial valley lakes"),
    ] {
        println!(
            "{:>3} {:>3}  {a:?} / {b:?}",
            ratio(a, b),
            token_set_ratio(a, b)
        );
    }

    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus.jsonl");
    let docs = read_corpus(corpus)?.collect::<wikinav::Result<Vec<_>>>()?;
    let (g, _) = build_graph(
        docs,
        &BuildOptions {
            target_words: 40,
            ..BuildOptions::default()
        },
    )?;
    let evidence = "Winters are long and cold and the river freezes from December to March";
    let hits = align_evidence(evidence, &g);
    println!("\nnodes scoring >= {MATCH_THRESHOLD} against {evidence:?}:");
    for n in hits {
        println!("  {}", g.label(n));
    }
    Ok(())
}
