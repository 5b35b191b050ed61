//! Built-in benchmark assets: the Park test function, a Gini decision tree,
//! and desk-scale synthetic datasets.

pub mod park;
pub mod synth;
pub mod token;
pub mod tree;

pub use park::{park_model, ParkFunction, PARK_POINT};
pub use synth::{
    clustered_benchmark, clustered_config, synth_tabular, ClusteredBenchmark, SynthConfig,
};
pub use token::{
    token_benchmark, token_benchmark_with, LinearSoftmax, TokenBenchmark, TokenConfig,
};
pub use tree::{fit_decision_tree, DecisionTreeModel, SplitCriterion};
