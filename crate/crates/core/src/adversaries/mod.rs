//! Adversary strategies.

mod constrained;
mod constraint;
mod halving;
mod labels;

pub use constrained::{ConstrainedAdversary, Proposal};
pub use constraint::{Constraint, MoveNorm, SigmaSchedule, CONSTRAINT_TOL};
pub use halving::{perturb, Halving, Noise, Smoothed};
pub use labels::{Hybrid, Iid, LabelPolicy};

use crate::domain::Point;
use crate::error::Result;
use crate::learners::Learner;
use crate::rng::SimRng;

/// One adversary move. `realized` is what the learner pays on; it differs
/// from `intended` only under smoothing, where `noise` holds the draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Move {
    pub intended: Point,
    pub realized: Point,
    pub noise: Option<f64>,
}

impl Move {
    pub fn plain(x: Point) -> Self {
        Self {
            realized: x.clone(),
            intended: x,
            noise: None,
        }
    }
}

pub trait Adversary: Send {
    fn name(&self) -> &str;

    /// Chooses the next move after the learner has committed to `q_t`; only
    /// the learner's public views (expected losses, mean vector) are used.
    fn next_move(&mut self, learner: &dyn Learner, rng: &mut SimRng) -> Result<Move>;

    /// Restriction the intended moves obey.
    fn constraint(&self) -> &Constraint {
        &Constraint::None
    }
}
