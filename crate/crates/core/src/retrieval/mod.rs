//! Keyword start nodes, sentence re-ranking, fuzzy evidence alignment,
//! target-encoder finetuning and the evidence pipeline.

mod bm25;
mod claims;
mod encoder;
mod fuzzy;
mod pipeline;
mod tfidf;

pub use bm25::{bm25_top_k, Bm25Index, B, K1};
pub use claims::{read_claims, synth_claims, write_claims, Claim, ClaimSpec};
pub use encoder::{finetune_target_encoder, FinetuneConfig, FinetuneReport, TargetEncoderParams};
pub use fuzzy::{
    align_evidence, matching_chars, ratio, token_set_at_least, token_set_ratio, MATCH_THRESHOLD,
};
pub use pipeline::{
    evidence_pipeline, mean_metrics, node_recall_at_k, prf1_at_k, run_claims, ClaimResult,
    Evidence, PipelineConfig, Prf1, Retrieved,
};
pub use tfidf::{tfidf_idf, tfidf_rank, tfidf_vector};
