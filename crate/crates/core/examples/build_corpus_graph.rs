//! Builds a graph from a JSON-lines corpus, saves it and reads it back.
//!
//!     cargo run --example build_corpus_graph [corpus.jsonl]

use wikinav::graph::{self, Direction};
use wikinav::ingest::{build_graph, read_corpus, BuildOptions};

fn main() -> wikinav::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus.jsonl").to_string()
    });
    let docs = read_corpus(&path)?.collect::<wikinav::Result<Vec<_>>>()?;
    let (g, report) = build_graph(docs, &BuildOptions::default())?;
    print!("{report}");

    let dir = std::env::temp_dir().join("wikinav-example");
    std::fs::create_dir_all(&dir)?;
    let file = dir.join("corpus.navg");
    graph::save(&g, &file)?;
    let back = graph::load(&file)?;
    assert_eq!(graph::write_graph(&back), graph::write_graph(&g));

    for n in back.node_ids() {
        let out: Vec<String> = back
            .neighbors(n)?
            .iter()
            .map(|e| format!("{:?} -> {}", e.kind, back.label(e.target)))
            .collect();
        let reach = back
            .bfs_levels(n, 10, Direction::Forward)?
            .iter()
            .filter(|&&l| l != wikinav::graph::UNREACHED)
            .count();
        println!("{}: reaches {reach} nodes", back.label(n));
        for o in out {
            println!("    {o}");
        }
    }
    Ok(())
}
