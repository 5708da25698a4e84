//! Action explanation from relation chains.
//!
//! Pipeline: [`extract_features`] turns the chains between an actor and every
//! co-occurring object into binary vectors, [`train`] fits one bagged forest
//! per action, and [`explain`] ranks the objects by forest score.

pub mod dataset;
pub mod encoding;
pub mod explain;
pub mod metrics;
pub mod model;
pub mod tree;

use thiserror::Error;

pub use dataset::{build_dataset, Dataset, LabeledGraph, TrainingSample};
pub use encoding::{extract_features, EncodingSpec, FeatureName, FeatureVector, PairChain};
pub use explain::{explain, ExplanationCandidate};
pub use metrics::{cause_recovery, evaluate, ActionMetrics, CauseRecovery, EvalReport};
pub use model::{load_model, save_model, score, train, Forest, Hyperparams, ModelBundle};
pub use tree::{fit_tree, DecisionPath, DecisionTree, TreeNode, TreeParams};

pub const DEFAULT_T: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExplainError {
    #[error("object `{actor}` is not present at frame {frame}")]
    ActorNotPresent { actor: String, frame: u32 },
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("feature vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("action `{0}` has no positive samples")]
    EmptyAction(String),
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("no training samples")]
    EmptyData,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("unsupported model version {found}")]
    VersionMismatch { found: u64 },
    #[error("corrupt model: {0}")]
    CorruptModel(String),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}
