pub mod amr;
pub mod embeddings;
pub mod graco;
pub mod graph;
pub mod harness;
pub mod lemma;
pub mod score;
pub mod text;
