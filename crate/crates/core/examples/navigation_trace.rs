//! Prints a few policy episodes as title (paragraph) paths.

use wikinav::agents::{evaluate, write_trace, AgentKind, TaskKind, TaskSpec};
use wikinav::embed::{embed_graph, EmbedderConfig};
use wikinav::ingest::{synth_graph, SynthSpec};
use wikinav::policy::{train_bc, NavContext, TrainConfig};

fn main() -> wikinav::Result<()> {
    let g = synth_graph(&SynthSpec::default())?;
    let emb = EmbedderConfig::hashed(128, 0);
    let table = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);
    let (policy, _) = train_bc(
        &ctx,
        &TrainConfig {
            steps: 1500,
            ..TrainConfig::desk()
        },
        None,
    )?;
    let task = TaskSpec::new(TaskKind::SentenceSearch(4), 20, 4, 3);
    let e = evaluate(&task, &AgentKind::Policy(&policy), &ctx)?;
    println!("{e}");
    write_trace(&g, &e, std::io::stdout().lock())
}
