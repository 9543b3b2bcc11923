//! Trees, paths, the selector and the paired-tree sampling process.

mod strategy;
mod tree;

pub use strategy::{
    sample_along, sample_path, sample_tree_pair, Kernel, MarkovStep, ObliviousStrategy, PathSample,
};
pub use tree::{chi, node_index, BinaryTree, Path, MAX_FULL_DEPTH};
