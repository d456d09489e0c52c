//! Corpus ingestion, synthetic graphs and train/eval splitting.

mod build;
mod chunk;
mod split;
mod synth;

pub use build::{build_graph, read_corpus, BuildOptions, BuildReport, MIN_BODY_CHARS};
pub use chunk::{chunk_document, Chunk, Link, RawDocument};
pub use split::{induced, split_disjoint};
pub use synth::{synth_graph, SynthSpec, World};
