//! Rademacher-type complexities, covering numbers and the entropy bound.

mod cover;
mod dudley;
mod rademacher;
mod sup;

pub use cover::{
    covering_number, CoverInstance, CoverResult, PNorm, COVER_NODE_BUDGET, MAX_COVER_DEPTH,
    MAX_COVER_FUNCTIONS,
};
pub use dudley::{dudley_bound, dudley_on_tree, CoverProfile, GOLDEN_TOL};
pub use rademacher::{
    classical_rademacher, distdep_rademacher, paired_samples, rademacher_on_sequence,
    worstcase_sequential_rademacher, DistDepOptions, EstimateCI, PathMode, TreeSampling,
    DEFAULT_INNER_MC, EXACT_SIGN_DEPTH, WORSTCASE_BUDGET,
};
