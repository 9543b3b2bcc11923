use super::Learner;
use crate::coord::Coord;
use crate::domain::{ball_minimizer, best_fixed_comparator, FunctionClass, Hypothesis, Point};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Follow the leader: plays the best hypothesis on the moves so far, and
/// the class default before the first move.
#[derive(Debug, Clone)]
pub struct Ftl {
    class: FunctionClass,
    current: Hypothesis,
    history: Vec<Point>,
    /// Running sum for linear classes.
    sum: Option<Vec<f64>>,
}

impl Ftl {
    pub fn new(class: FunctionClass) -> Self {
        let sum = class.dimension().map(|d| vec![0.0; d]);
        Self {
            current: class.default_hypothesis(),
            class,
            history: Vec::new(),
            sum,
        }
    }

    pub fn current(&self) -> &Hypothesis {
        &self.current
    }
}

/// `ftl_step`: the leader on a history (the class default when empty).
pub fn ftl_step(history: &[Point], class: &FunctionClass) -> Result<Hypothesis> {
    if history.is_empty() {
        return Ok(class.default_hypothesis());
    }
    best_fixed_comparator(class, history).map(|r| r.0)
}

impl Learner for Ftl {
    fn name(&self) -> &str {
        "ftl"
    }

    fn is_randomized(&self) -> bool {
        false
    }

    fn draw(&self, _rng: &mut SimRng) -> Hypothesis {
        self.current.clone()
    }

    fn loss(&self, h: &Hypothesis, x: &Point) -> Result<f64> {
        self.class.evaluate(h, x)
    }

    fn expected_loss(&self, x: &Point) -> Result<f64> {
        self.class.evaluate(&self.current, x)
    }

    fn update(&mut self, x: &Point) -> Result<()> {
        match (&mut self.sum, &self.class) {
            (Some(s), class) => {
                let v = x
                    .as_vector()
                    .filter(|v| v.len() == s.len())
                    .ok_or_else(|| Error::DomainMismatch {
                        class: class.variant_name(),
                        point: x.to_string(),
                    })?;
                for (a, b) in s.iter_mut().zip(v) {
                    *a += b;
                }
                self.current = match class {
                    FunctionClass::LinearBall { radius, norm, .. } => {
                        Hypothesis::Vector(ball_minimizer(*radius, *norm, s))
                    }
                    _ => {
                        let j = (0..s.len()).fold(0, |j, k| if s[k] < s[j] { k } else { j });
                        let mut e = vec![0.0; s.len()];
                        e[j] = 1.0;
                        Hypothesis::Vector(e)
                    }
                };
            }
            (None, _) => {
                self.history.push(x.clone());
                self.current = ftl_step(&self.history, &self.class)?;
            }
        }
        Ok(())
    }

    fn mean_vector(&self) -> Option<Vec<f64>> {
        match &self.current {
            Hypothesis::Vector(v) => Some(v.clone()),
            _ => None,
        }
    }

    fn prob_predict_one(&self, z: Coord) -> Option<f64> {
        let theta = match (&self.class, &self.current) {
            (FunctionClass::ThresholdGrid(g), Hypothesis::Index(i)) => g.threshold_coord(*i as u64),
            (FunctionClass::ThresholdInterval { .. }, Hypothesis::Threshold(t)) => *t,
            _ => return None,
        };
        Some(if z < theta { 1.0 } else { 0.0 })
    }
}
