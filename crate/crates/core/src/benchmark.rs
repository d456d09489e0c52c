//! The fixed synthetic benchmark. Policies are trained on trajectories of a
//! training graph (several instances of the same synthetic world, side by
//! side) and evaluated on a separate instance they never saw.

use crate::embed::{embed_graph, EmbedderConfig, EmbedderKind, EmbeddingTable};
use crate::error::Result;
use crate::graph::Graph;
use crate::ingest::{synth_graph, SynthSpec};
use crate::policy::NavContext;

/// Seed of the evaluation graph.
pub const SEED: u64 = 17;
/// Training instances use seeds `TRAIN_SEED..TRAIN_SEED + TRAIN_COPIES`.
pub const TRAIN_SEED: u64 = 100;
pub const TRAIN_COPIES: u64 = 10;
pub const DIM: usize = 256;
/// Step budget for benchmark tasks.
pub const BUDGET: usize = 50;

/// A graph with its node vectors.
pub struct Split {
    pub graph: Graph,
    pub table: EmbeddingTable,
}

pub struct Benchmark {
    pub embedder: EmbedderConfig,
    pub train: Split,
    pub eval: Split,
}

impl Benchmark {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_embedder(EmbedderConfig::hashed(dim, 0))
    }

    pub fn with_embedder(embedder: EmbedderConfig) -> Result<Self> {
        let parts = (TRAIN_SEED..TRAIN_SEED + TRAIN_COPIES)
            .map(|s| synth_graph(&SynthSpec::benchmark(s)))
            .collect::<Result<Vec<_>>>()?;
        let train = Graph::disjoint_union(&parts);
        let eval = eval_graph()?;
        Ok(Benchmark {
            train: Split {
                table: embed_graph(&embedder, &train)?,
                graph: train,
            },
            eval: Split {
                table: embed_graph(&embedder, &eval)?,
                graph: eval,
            },
            embedder,
        })
    }

    pub fn train_ctx(&self) -> NavContext<'_> {
        NavContext::new(&self.train.graph, &self.train.table, &self.embedder)
    }

    pub fn eval_ctx(&self) -> NavContext<'_> {
        NavContext::new(&self.eval.graph, &self.eval.table, &self.embedder)
    }

    /// Random-feature tables for both graphs, in place of text embeddings.
    pub fn random_features(&self, seed: u64) -> Result<(EmbeddingTable, EmbeddingTable)> {
        let cfg = |seed| EmbedderConfig {
            kind: EmbedderKind::RandomFeature,
            seed,
            ..self.embedder.clone()
        };
        Ok((
            embed_graph(&cfg(seed), &self.train.graph)?,
            embed_graph(&cfg(seed + 1), &self.eval.graph)?,
        ))
    }
}

/// The evaluation graph alone.
pub fn eval_graph() -> Result<Graph> {
    synth_graph(&SynthSpec::benchmark(SEED))
}
