//! Hashed bag-of-words vectors: paragraphs of one article sit closer to each
//! other than to paragraphs of unrelated articles.

use wikinav::embed::{cosine_similarity, embed_graph, embed_target_sentence, EmbedderConfig};
use wikinav::ingest::{synth_graph, SynthSpec};
use wikinav::text::split_sentences;

fn main() -> wikinav::Result<()> {
    let g = synth_graph(&SynthSpec::default())?;
    let cfg = EmbedderConfig::hashed(256, 0);
    let table = embed_graph(&cfg, &g)?;

    let (mut same, mut other, mut ns, mut no) = (0.0, 0.0, 0, 0);
    for a in g.nodes().iter().take(200) {
        for b in g.nodes().iter().take(200) {
            if a.id == b.id {
                continue;
            }
            let c = cosine_similarity(table.get(a.id), table.get(b.id))?;
            if a.article_id == b.article_id {
                same += c;
                ns += 1;
            } else {
                other += c;
                no += 1;
            }
        }
    }
    println!(
        "mean cosine, same article {:.3}, different articles {:.3}",
        same / ns as f64,
        other / no as f64
    );

    let node = &g.nodes()[7];
    let sentence = &split_sentences(&node.text)[0];
    let goal = embed_target_sentence(&cfg, sentence)?;
    let mut ranked: Vec<_> = g
        .node_ids()
        .map(|n| (cosine_similarity(&goal, table.get(n)).unwrap(), n))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!(
        "\nsentence: {sentence}\nfrom {}; nearest nodes:",
        g.label(node.id)
    );
    for (c, n) in ranked.iter().take(5) {
        println!("  {c:.3} {}", g.label(*n));
    }
    Ok(())
}
