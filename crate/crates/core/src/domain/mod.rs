//! Hypothesis classes, domain points, comparators and game descriptions.

mod class;
mod comparator;
mod game;
mod point;

pub use class::{
    ball_norm, dot, l1_norm, l2_norm, sup_norm, BallNorm, FiniteTable, FunctionClass, ThresholdGrid,
};
pub use comparator::{ball_minimizer, best_fixed_comparator, linear_total, total_loss};
pub use game::{GameSpec, LossKind, Protocol, RegretRecord};
pub use point::{Hypothesis, Point};

/// `f(x)` for a class element; see [`FunctionClass::evaluate`].
pub fn evaluate(class: &FunctionClass, hypothesis: &Hypothesis, x: &Point) -> crate::Result<f64> {
    class.evaluate(hypothesis, x)
}
