//! Trains a navigation policy by behavioral cloning on forward walks and
//! compares it with the baseline agents on unseen episodes.
//!
//!     cargo run --release --example train_and_evaluate [steps]

use std::time::Instant;

use wikinav::agents::{evaluate, AgentKind, TaskKind, TaskSpec};
use wikinav::embed::{embed_graph, EmbedderConfig};
use wikinav::ingest::{synth_graph, SynthSpec};
use wikinav::policy::{train_bc, NavContext, TrainConfig};

fn main() -> wikinav::Result<()> {
    let steps = std::env::args()
        .nth(1)
        .map_or(2000, |s| s.parse().expect("steps"));
    let g = synth_graph(&SynthSpec::fixture_1k(5))?;
    let emb = EmbedderConfig::hashed(128, 0);
    let table = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);

    let t0 = Instant::now();
    let cfg = TrainConfig {
        steps,
        ..TrainConfig::desk()
    };
    let (policy, log) = train_bc(&ctx, &cfg, None)?;
    println!(
        "{steps} updates in {:.1?}, loss {:.3} -> {:.3}",
        t0.elapsed(),
        log.mean_loss(0, 100),
        log.mean_loss(steps - 100, steps)
    );

    let task = TaskSpec::new(TaskKind::NavT(5), 50, 500, 99);
    for agent in [
        AgentKind::Policy(&policy),
        AgentKind::Random,
        AgentKind::Greedy,
        AgentKind::RandomDfs { max_depth: 0 },
        AgentKind::GreedyDfs { max_depth: 0 },
    ] {
        println!("{}", evaluate(&task, &agent, &ctx)?);
    }
    Ok(())
}
