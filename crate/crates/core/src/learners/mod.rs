//! Player strategies.

mod ew;
mod ftl;
mod omd;

pub use ew::{
    discretization_exponent, discretized_ew_learner, discretized_ew_learner_capped, ew_step,
    hedge_eta, DenseEw, Discretization, GridEw, MAX_DISCRETIZATION,
};
pub use ftl::{ftl_step, Ftl};
pub use omd::{omd_step, Hint, Omd, OptimisticOmd, Regularizer, RegularizerKind};

use crate::coord::Coord;
use crate::domain::{Hypothesis, Point};
use crate::error::Result;
use crate::rng::SimRng;

/// A player: holds its mixed strategy `q_t` and learns from each move.
pub trait Learner: Send {
    fn name(&self) -> &str;

    /// Whether [`Learner::draw`] consumes randomness.
    fn is_randomized(&self) -> bool;

    /// A hypothesis drawn from `q_t`.
    fn draw(&self, rng: &mut SimRng) -> Hypothesis;

    /// Loss of one of the learner's hypotheses on a (realized) move.
    fn loss(&self, h: &Hypothesis, x: &Point) -> Result<f64>;

    /// `E_{f ~ q_t} loss(f, x)`.
    fn expected_loss(&self, x: &Point) -> Result<f64>;

    /// Observes the realized move and advances to `q_{t+1}`.
    fn update(&mut self, x: &Point) -> Result<()>;

    /// `E_{f ~ q_t} f` for linear games.
    fn mean_vector(&self) -> Option<Vec<f64>> {
        None
    }

    /// `P_{f ~ q_t}(f predicts 1 at z)` for threshold games.
    fn prob_predict_one(&self, _z: Coord) -> Option<f64> {
        None
    }
}
