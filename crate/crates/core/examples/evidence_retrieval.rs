//! The claim pipeline on a synthetic wiki: BM25 starts, policy walks toward
//! the claim, TF-IDF sentence ranking. Compares walking with not walking.
//!
//!     cargo run --release --example evidence_retrieval

use wikinav::embed::{embed_graph, EmbedderConfig};
use wikinav::ingest::{synth_graph, SynthSpec};
use wikinav::policy::{train_bc, GoalMode, NavContext, TrainConfig};
use wikinav::retrieval::{
    finetune_target_encoder, mean_metrics, run_claims, synth_claims, Bm25Index, ClaimSpec,
    FinetuneConfig, PipelineConfig, TargetEncoderParams,
};

fn main() -> wikinav::Result<()> {
    let g = synth_graph(&SynthSpec::fixture_1k(2))?;
    let emb = EmbedderConfig::hashed(128, 0);
    let table = embed_graph(&emb, &g)?;
    let ctx = NavContext::new(&g, &table, &emb);
    let index = Bm25Index::build(&g)?;
    let (policy, _) = train_bc(
        &ctx,
        &TrainConfig {
            steps: 3000,
            goal: GoalMode::Sentence,
            ..TrainConfig::desk()
        },
        None,
    )?;

    let spec = ClaimSpec {
        n_claims: 300,
        hops: 5,
        min_df: 0.06,
        ..ClaimSpec::default()
    };
    let fit = synth_claims(
        &g,
        &ClaimSpec {
            seed: 1,
            ..spec.clone()
        },
    )?;
    let test = synth_claims(
        &g,
        &ClaimSpec {
            n_claims: 100,
            seed: 2,
            ..spec
        },
    )?;
    println!(
        "claim: {}\ngold:  {}\n",
        test[0].text, test[0].gold_sentences[0]
    );

    let cfg = FinetuneConfig {
        steps: 300,
        ..FinetuneConfig::default()
    };
    let (encoder, report) = finetune_target_encoder(
        &TargetEncoderParams::identity(128),
        &fit,
        &policy,
        &ctx,
        &index,
        &cfg,
    )?;
    println!(
        "encoder fit on {} transitions ({} claims skipped)",
        report.transitions, report.skipped
    );

    for nav_steps in [0, 5, 20] {
        let pc = PipelineConfig {
            nav_steps,
            ..PipelineConfig::default()
        };
        let results = run_claims(&test, &index, &policy, &encoder, &ctx, &pc)?;
        let (m, at) = mean_metrics(&results);
        let at: Vec<String> = at.iter().map(|r| format!("{r:.2}")).collect();
        println!(
            "nav_steps {nav_steps:>2}: P@5 {:.3} R@5 {:.3} F1@5 {:.3}  recall@1..5 [{}]",
            m.precision,
            m.recall,
            m.f1,
            at.join(" ")
        );
    }
    Ok(())
}
