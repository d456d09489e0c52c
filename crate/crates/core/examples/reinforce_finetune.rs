//! REINFORCE from scratch and as a finetune of a behavioral-cloning policy.

use wikinav::agents::{evaluate, AgentKind, TaskKind, TaskSpec};
use wikinav::embed::{embed_graph, EmbedderConfig};
use wikinav::ingest::{synth_graph, SynthSpec};
use wikinav::policy::{reinforce_train, train_bc, NavContext, RlConfig, TrainConfig};

fn main() -> wikinav::Result<()> {
    let g = synth_graph(&SynthSpec::default())?;
    let emb = EmbedderConfig::hashed(128, 0);
    let table = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);
    let task = TaskSpec::new(TaskKind::NavT(5), 50, 400, 11);

    let bc = TrainConfig {
        steps: 1000,
        ..TrainConfig::desk()
    };
    let (policy, _) = train_bc(&ctx, &bc, None)?;
    let rl = RlConfig {
        env_steps: bc.steps * bc.batch,
        ..RlConfig::default()
    };
    let (scratch, log) = reinforce_train(&ctx, &rl, None)?;
    let last = log
        .rows
        .iter()
        .rev()
        .take(20)
        .filter_map(|r| r.probe)
        .sum::<f64>()
        / 20.0;
    println!(
        "reinforce: {} updates, batch success at the end {:.2}",
        log.rows.len(),
        last
    );
    let (tuned, _) = reinforce_train(
        &ctx,
        &RlConfig {
            env_steps: rl.env_steps / 10,
            ..rl
        },
        Some(policy.clone()),
    )?;

    for (name, p) in [
        ("bc", &policy),
        ("reinforce", &scratch),
        ("bc + reinforce", &tuned),
    ] {
        let e = evaluate(&task, &AgentKind::Policy(p), &ctx)?;
        println!("{name:<15} {:.1}%", 100.0 * e.success_rate);
    }
    Ok(())
}
