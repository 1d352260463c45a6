//! Community-level fairness auditing and coreset debiasing for graph
//! convolutional networks.
//!
//! The pipeline, stage by stage:
//!
//! 1. [`graph`]: load or build an undirected attributed [`Graph`].
//! 2. [`embed`]: biased random walks and skip-gram embeddings.
//! 3. [`community`]: k-means over the embeddings yields communities.
//! 4. [`homophily`]: per-node same-label edge ratios.
//! 5. [`coreset`]: community and subgroup stratified coreset, ranked by
//!    homophily extremes.
//! 6. [`gnn`]: a two-layer GCN trained on cross-entropy plus a similarity
//!    parity penalty over coreset embeddings.
//! 7. [`audit`]: accuracy, AUC, statistical parity and equal opportunity,
//!    pooled and per community, with paradox detection.
//!
//! [`pipeline`] chains the stages through files; the `commaudit` binary exposes
//! each stage as a subcommand. [`datagen`] produces synthetic polarized
//! graphs for experiments.

pub mod audit;
pub mod community;
pub mod coreset;
pub mod datagen;
pub mod embed;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod homophily;
pub mod linalg;
pub mod pipeline;
pub mod rng;
pub mod sparse;

pub use error::{Error, ErrorCategory, Result};
pub use graph::{Graph, NodeSplit};
pub use linalg::Matrix;
pub use sparse::{normalized_adjacency, SparseOperator};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/embeddings.md")]
    mod embeddings {}
    #[doc = include_str!("../../../book/src/communities.md")]
    mod communities {}
    #[doc = include_str!("../../../book/src/homophily.md")]
    mod homophily {}
    #[doc = include_str!("../../../book/src/coreset.md")]
    mod coreset {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/audit.md")]
    mod audit {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
