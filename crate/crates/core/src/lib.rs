//! Resource-diffusion recommendation on user-item bipartite graphs.
//!
//! The crate covers the whole offline pipeline: ingesting interaction logs,
//! splitting links into training and probe sets, building the training
//! graph, extracting per-user expertise scores, scoring candidates with the
//! diffusion kernels (mass diffusion, heat conduction, their hybrids and the
//! expert-weighted variants) and evaluating top-K lists for accuracy and
//! diversity.
//!
//! ```
//! use diffrec::graph::BipartiteGraph;
//! use diffrec::kernels::{md_scores, top_k};
//!
//! let graph = BipartiteGraph::from_links(2, 3, &[(0, 0), (0, 1), (1, 0), (1, 2)]);
//! let scores = md_scores(&graph, 0);
//! let list = top_k(&scores, &graph, 0, 1);
//! assert_eq!(list.items[0].0, 2);
//! ```

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod expertise;
pub mod graph;
pub mod kernels;
pub mod metrics;
pub mod reference;

pub use dataset::{InteractionLog, SplitDataset};
pub use error::{Error, Result};
pub use expertise::{ExpertiseMethod, ExpertiseVector, GiniMode};
pub use graph::BipartiteGraph;
pub use kernels::{
    KernelSpec, Method, RecommendationList, ScoreVector, Scorer, ShareNormalization,
};
pub use metrics::{EvalReport, HammingMode};
