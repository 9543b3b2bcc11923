use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{Adversary, Move};
use crate::dist::PointDist;
use crate::domain::Point;
use crate::error::Result;
use crate::learners::Learner;
use crate::rng::SimRng;

/// Draws every move from a fixed law, ignoring the history.
#[derive(Debug, Clone)]
pub struct Iid {
    pub dist: PointDist,
}

impl Adversary for Iid {
    fn name(&self) -> &str {
        "iid"
    }

    fn next_move(&mut self, _learner: &dyn Learner, rng: &mut SimRng) -> Result<Move> {
        Ok(Move::plain(self.dist.sample(rng)))
    }
}

type LabelFn = dyn Fn(&[Point], &Point, &dyn Learner, &mut SimRng) -> Result<f64> + Send + Sync;

/// How a supervised adversary labels its i.i.d. instance.
#[derive(Clone)]
pub enum LabelPolicy {
    /// Fair coin on `{0, 1}`, independent of everything.
    Rademacher,
    /// The label with the larger expected learner loss (ties go to 1).
    OppositeMajority,
    /// Arbitrary rule of the history, the instance and the learner's views.
    Custom(Arc<LabelFn>),
}

impl fmt::Debug for LabelPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelPolicy::Rademacher => write!(f, "Rademacher"),
            LabelPolicy::OppositeMajority => write!(f, "OppositeMajority"),
            LabelPolicy::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Instances i.i.d. from `x_dist`, labels from `policy`.
#[derive(Debug, Clone)]
pub struct Hybrid {
    x_dist: PointDist,
    policy: LabelPolicy,
    history: Vec<Point>,
}

impl Hybrid {
    pub fn new(x_dist: PointDist, policy: LabelPolicy) -> Self {
        Self {
            x_dist,
            policy,
            history: Vec::new(),
        }
    }

    /// History-independent fair labels.
    pub fn rademacher(x_dist: PointDist) -> Self {
        Self::new(x_dist, LabelPolicy::Rademacher)
    }

    pub fn history(&self) -> &[Point] {
        &self.history
    }
}

impl Adversary for Hybrid {
    fn name(&self) -> &str {
        match self.policy {
            LabelPolicy::Rademacher => "rademacher_labels",
            LabelPolicy::OppositeMajority => "opposite_majority",
            LabelPolicy::Custom(_) => "custom_labels",
        }
    }

    fn next_move(&mut self, learner: &dyn Learner, rng: &mut SimRng) -> Result<Move> {
        let x = self.x_dist.sample(rng);
        let y = match &self.policy {
            LabelPolicy::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    0.0
                }
            }
            LabelPolicy::OppositeMajority => {
                let on_zero = learner.expected_loss(&Point::Labeled {
                    x: Box::new(x.clone()),
                    y: 0.0,
                })?;
                let on_one = learner.expected_loss(&Point::Labeled {
                    x: Box::new(x.clone()),
                    y: 1.0,
                })?;
                if on_one >= on_zero {
                    1.0
                } else {
                    0.0
                }
            }
            LabelPolicy::Custom(f) => f(&self.history, &x, learner, rng)?,
        };
        let p = Point::Labeled { x: Box::new(x), y };
        self.history.push(p.clone());
        Ok(Move::plain(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FunctionClass;
    use crate::learners::{Ftl, GridEw};
    use crate::rng::rng_from_seed;
    use crate::stats::{ks_critical_01, ks_statistic, ks_two_sample, mean_and_se};

    fn ftl() -> Ftl {
        Ftl::new(FunctionClass::threshold_grid(16, 0.0).unwrap())
    }

    fn split(moves: &[Move]) -> (Vec<f64>, Vec<f64>) {
        moves
            .iter()
            .map(|m| match &m.realized {
                Point::Labeled { x, y } => (x.primary_value(), *y),
                _ => unreachable!(),
            })
            .unzip()
    }

    #[test]
    fn iid_is_deterministic_per_seed() {
        let mut a = Iid {
            dist: PointDist::UniformSphere(2),
        };
        let l = ftl();
        let first = a.next_move(&l, &mut rng_from_seed(4)).unwrap();
        assert_eq!(first, a.next_move(&l, &mut rng_from_seed(4)).unwrap());
        let mut c = Iid {
            dist: PointDist::PointMass(Point::Index(2)),
        };
        assert_eq!(
            c.next_move(&l, &mut rng_from_seed(1)).unwrap().realized,
            Point::Index(2)
        );
    }

    #[test]
    fn rademacher_labels_are_fair_and_independent() {
        let n = 10_000;
        let mut adv = Hybrid::rademacher(PointDist::uniform_unit());
        let l = ftl();
        let mut rng = rng_from_seed(9);
        let moves: Vec<Move> = (0..n)
            .map(|_| adv.next_move(&l, &mut rng).unwrap())
            .collect();
        let (xs, ys) = split(&moves);
        let (m, se) = mean_and_se(&ys);
        assert!((m - 0.5).abs() <= 3.0 * se);
        assert!(ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) < ks_critical_01(n as f64));
        let mx = xs.iter().sum::<f64>() / n as f64;
        let prods: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - m))
            .collect();
        let (c, cse) = mean_and_se(&prods);
        assert!(c.abs() <= 3.0 * cse, "covariance {c} se {cse}");
    }

    #[test]
    fn adaptive_labels_leave_the_marginal_alone() {
        let n = 5_000;
        let grid = crate::domain::ThresholdGrid::new(16, 0.0).unwrap();
        let mut learner = GridEw::new(grid, 0.3).unwrap();
        let mut adv = Hybrid::new(PointDist::uniform_unit(), LabelPolicy::OppositeMajority);
        let mut rng = rng_from_seed(11);
        let mut moves = Vec::new();
        for _ in 0..n {
            let mv = adv.next_move(&learner, &mut rng).unwrap();
            // the chosen label costs the learner at least 1/2 in expectation
            assert!(learner.expected_loss(&mv.realized).unwrap() >= 0.5 - 1e-12);
            learner.update(&mv.realized).unwrap();
            moves.push(mv);
        }
        let mut plain = Hybrid::rademacher(PointDist::uniform_unit());
        let mut rng = rng_from_seed(12);
        let other: Vec<Move> = (0..n)
            .map(|_| plain.next_move(&learner, &mut rng).unwrap())
            .collect();
        let (xa, _) = split(&moves);
        let (xb, _) = split(&other);
        assert!(ks_two_sample(&xa, &xb) < 1.63 * (2.0 / n as f64).sqrt());
        assert_eq!(adv.history().len(), n);
    }
}
