//! Games, bounds and verdicts.

mod bounds;
mod output;
mod run;
mod spec;
mod verify;

pub use bounds::{
    slow_change_bound, slow_change_bound_simplex, smoothed_threshold_bound, variance_bound,
    variance_bound_simplex, Bound, BoundTrace,
};
pub use output::{regret_svg, runs_csv, Summary};
pub use run::{play_game, play_replicate, replicate_seed, run_game, GameParts, GameTrace};
pub use spec::{
    AdversarySpec, BoundSpec, ClassSpec, ConstraintSpec, DistSpec, ExperimentSpec, LabelKind,
    LearnerSpec, ProposalKind, RegretMode,
};
pub use verify::{
    collision_check, lower_bound_check, verify_bound, CollisionReport, LowerBoundVerdict,
    SlackStats, Verdict,
};
