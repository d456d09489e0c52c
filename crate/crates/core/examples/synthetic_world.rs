//! Generates a synthetic wiki and prints its degree and path-length profile.
//!
//!     cargo run --release --example synthetic_world [seed]

use wikinav::graph::Direction;
use wikinav::ingest::{synth_graph, SynthSpec};
use wikinav::stats::{degree_histogram, estimate_spl};

fn main() -> wikinav::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(17, |s| s.parse().expect("seed"));
    let g = synth_graph(&SynthSpec::benchmark(seed))?;
    println!("{} nodes, {} edges", g.len(), g.edge_count());
    let n = g.nodes().iter().find(|n| n.para_index == 0).unwrap();
    println!("\n{}\n{}\n", g.label(n.id), n.text);

    let out = degree_histogram(&g, Direction::Forward).log_binned();
    let inn = degree_histogram(&g, Direction::Reverse).log_binned();
    println!("degree  out  in");
    for i in 0..out.counts.len().max(inn.counts.len()) {
        let lo = out.boundaries.get(i).or(inn.boundaries.get(i)).unwrap();
        println!(
            "{lo:>6}+ {:>4} {:>4}",
            out.counts.get(i).unwrap_or(&0),
            inn.counts.get(i).unwrap_or(&0)
        );
    }
    let spl = estimate_spl(&g, 100, 64)?;
    println!(
        "\nshortest paths from the 100 most linked nodes: median {:?}",
        spl.median
    );
    for (len, c) in spl.histogram.boundaries.iter().zip(&spl.histogram.counts) {
        println!("{len:>3} {c}");
    }
    Ok(())
}
