//! Next-basket prediction engine.
//!
//! Predicts the exact set of items in a customer's next purchase by matching
//! their purchase history against every other customer's history. Baskets are
//! compared with the exact p-Wasserstein distance over item embeddings,
//! histories are compared with subsequence dynamic time warping, and the
//! prediction is assembled from the successor baskets of the k nearest
//! matches. Cheap Wasserstein lower bounds prune most exact transport solves
//! during the search.
//!
//! Module map:
//! - [`types`]: item/basket/history domain types, vocabulary interning, config
//! - [`embeddings`]: in-basket skip-gram trainer (full softmax) + persistence
//! - [`wasserstein`]: exact transport distance, lower bounds, pruned variant
//! - [`sdtw`]: DTW / subsequence DTW with endpoint recovery and early abandon
//! - [`predictor`]: kNN-SDTW search, basket assembly, fallback heuristic
//! - [`baselines`]: global-top, personal-top, repurchase, association rules
//! - [`evaluation`]: Wasserstein / F1 / Jaccard metrics and the test harness
//! - [`data_io`]: transaction-log ingestion, preprocessing filters, splits
//! - [`synth`]: synthetic corpus generator for benchmarks and fixtures

pub mod baselines;
pub mod data_io;
pub mod embeddings;
pub mod evaluation;
pub mod predictor;
pub mod sdtw;
pub mod synth;
pub mod types;
pub mod wasserstein;

mod flow;

pub use types::{Basket, ItemId, PredictionConfig, PurchaseHistory, Vocabulary};

/// Errors produced by the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vocabulary is frozen; cannot intern new item {0:?}")]
    VocabularyFrozen(String),
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Wasserstein order p must be >= 1, got {0}")]
    InvalidOrder(f64),
    #[error("ground distances must be finite")]
    NonFiniteDistance,
    #[error("point cloud is empty")]
    EmptyPointCloud,
    #[error("purchase history is empty")]
    EmptyHistory,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("embedding values overflowed during training (non-finite entries)")]
    NonFiniteEmbedding,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no eligible neighbor candidates (need at least one other customer with >= 2 baskets)")]
    NoEligibleNeighbors,
    #[error("predicted-basket size must be >= 1")]
    EmptySizeRequest,
    #[error("truth basket is empty")]
    EmptyTruth,
    #[error("both baskets are empty")]
    BothEmpty,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: u64,
        msg: String,
    },
    #[error("{path}: missing required column {column:?}")]
    MissingColumn { path: String, column: String },
    #[error("preprocessing removed every customer; relax --top-items/--min-baskets/--min-basket-size")]
    NoCustomersRetained,
    #[error("need at least 3 customers to split, got {0}")]
    TooFewCustomers(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
