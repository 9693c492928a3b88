//! Benchmark harness for knowledge-graph embeddings under structural change.
//!
//! The crate trains entity embeddings (a shallow contrastive model, DistMult,
//! ComplEx) on ablated copies of a knowledge graph, evaluates link prediction
//! per relation, and correlates the resulting accuracy with relation-centric
//! connectivity descriptors.
//!
//! The main entry points are [`graph::KnowledgeGraph`] for loading TSV triple
//! corpora, [`descriptors::describe`] for the connectivity report,
//! [`pipeline::run_benchmark`] and [`pipeline::run_ablation`] for the two
//! end-to-end studies, and the `kg` binary which fronts all of them.

pub mod descriptors;
pub mod factor;
pub mod graph;
pub mod link_eval;
pub mod pipeline;
pub mod rank_eval;
pub mod seed;
pub mod shallow;
pub mod splits;
pub mod stats;

use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: expected 3 tab-separated fields, found {found}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        found: usize,
    },
    #[error("empty corpus: no triples loaded")]
    EmptyCorpus,
    #[error("unknown relation id {0}")]
    UnknownRelation(u32),
    #[error("unknown entity id {0}")]
    UnknownEntity(u32),
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("knowledge graph has a single entity; descriptor undefined")]
    SingleEntity,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },
}

impl Error {
    fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than the requested
    /// configuration. The CLI maps these to distinct exit codes.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
