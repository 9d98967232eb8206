//! Toy-scale progression heads trained on synthetic features.

mod compare;
mod features;
mod head;
mod train;

pub use compare::{compare_methods, head_sequence, CompareConfig, Comparison, ComparisonRow};
pub use features::{make_features, Dataset, FeatureEmbedding, SyntheticFeatureSpec};
pub use head::{Cache, Head, Standardizer};
pub use train::{evaluate, predict, train, TrainConfig, TrainOutcome};
