use rand::Rng;

use super::{Adversary, Constraint, Move, MoveNorm};
use crate::dist::PointDist;
use crate::domain::{dot, Point};
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::rng::SimRng;

/// Where a constrained adversary's raw proposals come from.
#[derive(Debug, Clone)]
pub enum Proposal {
    /// Push the learner's mean iterate as far as the feasible ball allows
    /// in the direction that maximizes its expected linear loss.
    AntiLearner,
    /// Fresh i.i.d. draws.
    Iid(PointDist),
}

/// Linear-game adversary whose moves stay in the unit ball of `domain`
/// and satisfy `constraint`.
#[derive(Debug, Clone)]
pub struct ConstrainedAdversary {
    constraint: Constraint,
    proposal: Proposal,
    domain: MoveNorm,
    dimension: usize,
    history: Vec<Point>,
}

impl ConstrainedAdversary {
    pub fn new(
        constraint: Constraint,
        proposal: Proposal,
        domain: MoveNorm,
        dimension: usize,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        match &constraint {
            Constraint::Variance { sigma, .. } => sigma.validate()?,
            Constraint::SlowChange { delta, .. } if !(delta.is_finite() && *delta >= 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "slow-change delta {delta}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            constraint,
            proposal,
            domain,
            dimension,
            history: Vec::new(),
        })
    }

    pub fn history(&self) -> &[Point] {
        &self.history
    }

    /// Without a preferred direction (a zero or constant iterate) the push
    /// goes in a random direction, so replicates differ.
    fn anti_learner(
        &self,
        learner: &dyn Learner,
        center: &[f64],
        radius: f64,
        norm: MoveNorm,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>> {
        let mu = learner.mean_vector().ok_or_else(|| {
            Error::InvalidSpec(format!(
                "anti-learner needs a mean iterate; {} has none",
                learner.name()
            ))
        })?;
        if mu.len() != self.dimension {
            return Err(Error::InvalidSpec(format!(
                "learner dimension {} != game dimension {}",
                mu.len(),
                self.dimension
            )));
        }
        let mut dir = match norm {
            MoveNorm::L2 => {
                let n = dot(&mu, &mu).sqrt();
                if n > 0.0 {
                    mu.iter().map(|m| m / n).collect()
                } else {
                    vec![0.0; mu.len()]
                }
            }
            MoveNorm::Sup => {
                // centered, since a constant shift moves every simplex point equally
                let avg = mu.iter().sum::<f64>() / mu.len() as f64;
                mu.iter()
                    .map(|m| {
                        let d = m - avg;
                        if d.abs() <= 1e-15 {
                            0.0
                        } else {
                            d.signum()
                        }
                    })
                    .collect()
            }
        };
        if dir.iter().all(|d| *d == 0.0) {
            dir = match norm {
                MoveNorm::L2 => PointDist::UniformSphere(self.dimension)
                    .sample(rng)
                    .as_vector()
                    .expect("sphere draws vectors")
                    .to_vec(),
                MoveNorm::Sup => (0..self.dimension)
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect(),
            };
        }
        Ok(center
            .iter()
            .zip(&dir)
            .map(|(c, d)| c + radius * d)
            .collect())
    }

    /// Moves `x` into the unit domain ball along the segment to `center`
    /// (which is itself in the domain), so the constraint is preserved.
    fn pull_into_domain(&self, x: Vec<f64>, center: &[f64]) -> Vec<f64> {
        match self.domain {
            MoveNorm::Sup => x.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
            MoveNorm::L2 => {
                if dot(&x, &x) <= 1.0 {
                    return x;
                }
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let dd = dot(&d, &d);
                if dd == 0.0 {
                    // the center itself is outside by rounding
                    let n = dot(&x, &x).sqrt();
                    return x.iter().map(|v| v / n).collect();
                }
                let cd = dot(center, &d);
                let cc = dot(center, center);
                let disc = (cd * cd - dd * (cc - 1.0)).max(0.0);
                let lambda = ((-cd + disc.sqrt()) / dd).clamp(0.0, 1.0);
                let mut y: Vec<f64> = center
                    .iter()
                    .zip(&d)
                    .map(|(c, di)| c + lambda * di)
                    .collect();
                let n = dot(&y, &y).sqrt();
                if n > 1.0 {
                    y.iter_mut().for_each(|v| *v /= n);
                }
                y
            }
        }
    }
}

impl Adversary for ConstrainedAdversary {
    fn name(&self) -> &str {
        match self.proposal {
            Proposal::AntiLearner => "constrained_anti_learner",
            Proposal::Iid(_) => "constrained_iid",
        }
    }

    fn next_move(&mut self, learner: &dyn Learner, rng: &mut SimRng) -> Result<Move> {
        let ball = self.constraint.ball(&self.history)?;
        let (center, radius, norm) =
            ball.clone()
                .unwrap_or((vec![0.0; self.dimension], 1.0, self.domain));
        let raw = match &self.proposal {
            Proposal::AntiLearner => self.anti_learner(learner, &center, radius, norm, rng)?,
            Proposal::Iid(dist) => match dist.sample(rng) {
                Point::Vector(v) if v.len() == self.dimension => v,
                other => {
                    return Err(Error::DomainMismatch {
                        class: "constrained adversary",
                        point: other.to_string(),
                    })
                }
            },
        };
        let projected = match self
            .constraint
            .project(&self.history, &Point::Vector(raw))?
        {
            Point::Vector(v) => v,
            other => {
                return Err(Error::DomainMismatch {
                    class: "constrained adversary",
                    point: other.to_string(),
                })
            }
        };
        let x = Point::Vector(self.pull_into_domain(projected, &center));
        self.history.push(x.clone());
        Ok(Move::plain(x))
    }

    fn constraint(&self) -> &Constraint {
        &self.constraint
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversaries::SigmaSchedule;
    use crate::domain::{l2_norm, sup_norm, BallNorm, FunctionClass};
    use crate::learners::{Ftl, Omd, Regularizer};
    use crate::rng::rng_from_seed;

    fn run(adv: &mut ConstrainedAdversary, learner: &mut dyn Learner, rounds: usize, seed: u64) {
        let mut rng = rng_from_seed(seed);
        let mut hist = Vec::new();
        for t in 0..rounds {
            let mv = adv.next_move(learner, &mut rng).unwrap();
            assert!(
                adv.constraint().holds(&hist, &mv.intended).unwrap(),
                "violation at round {}",
                t + 1
            );
            let v = mv.intended.as_vector().unwrap();
            let n = match adv.domain {
                MoveNorm::L2 => l2_norm(v),
                MoveNorm::Sup => sup_norm(v),
            };
            assert!(n <= 1.0 + 1e-12);
            learner.update(&mv.realized).unwrap();
            hist.push(mv.intended);
        }
    }

    #[test]
    fn postcondition_over_many_moves() {
        // 10^5 moves in total across constraint kinds, norms and proposal sources
        let ball = FunctionClass::linear_ball(3, 1.0, BallNorm::Euclidean).unwrap();
        let simplex = FunctionClass::simplex(3).unwrap();
        let constraints = |norm| {
            vec![
                Constraint::Variance {
                    sigma: SigmaSchedule::Constant(0.1),
                    norm,
                },
                Constraint::Variance {
                    sigma: SigmaSchedule::PerRound(vec![0.3, 0.0, 0.05]),
                    norm,
                },
                Constraint::SlowChange { delta: 0.05, norm },
            ]
        };
        let mut seed = 0;
        for (norm, class, dist) in [
            (MoveNorm::L2, &ball, PointDist::UniformSphere(3)),
            (MoveNorm::Sup, &simplex, PointDist::UniformCube(3)),
        ] {
            for c in constraints(norm) {
                for proposal in [Proposal::AntiLearner, Proposal::Iid(dist.clone())] {
                    seed += 1;
                    let mut adv = ConstrainedAdversary::new(c.clone(), proposal, norm, 3).unwrap();
                    let reg = Regularizer::for_class(class).unwrap();
                    let mut learner = Omd::new(class.clone(), reg, 0.1).unwrap();
                    run(&mut adv, &mut learner, 8_334, seed);
                }
            }
        }
    }

    #[test]
    fn anti_learner_pushes_against_the_iterate() {
        let class = FunctionClass::linear_ball(2, 1.0, BallNorm::Euclidean).unwrap();
        let mut learner = Ftl::new(class);
        learner.update(&Point::Vector(vec![0.0, -1.0])).unwrap(); // iterate (0, 1)
        let c = Constraint::SlowChange {
            delta: 0.1,
            norm: MoveNorm::L2,
        };
        let mut adv = ConstrainedAdversary::new(c, Proposal::AntiLearner, MoveNorm::L2, 2).unwrap();
        adv.history.push(Point::Vector(vec![0.0, 0.0]));
        let mv = adv.next_move(&learner, &mut rng_from_seed(0)).unwrap();
        let v = mv.intended.as_vector().unwrap();
        assert!(v[0].abs() < 1e-15 && (v[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn pullback_at_the_center_stays_finite() {
        let c = Constraint::Variance {
            sigma: SigmaSchedule::Constant(0.0),
            norm: MoveNorm::L2,
        };
        let adv = ConstrainedAdversary::new(c, Proposal::AntiLearner, MoveNorm::L2, 2).unwrap();
        let x = vec![0.6000000000000001, 0.8];
        let y = adv.pull_into_domain(x.clone(), &x);
        assert!(y.iter().all(|v| v.is_finite()) && dot(&y, &y) <= 1.0 + 1e-15);
    }

    #[test]
    fn domain_pullback_keeps_the_constraint() {
        let c = Constraint::SlowChange {
            delta: 0.5,
            norm: MoveNorm::L2,
        };
        let adv = ConstrainedAdversary::new(c, Proposal::AntiLearner, MoveNorm::L2, 2).unwrap();
        let y = adv.pull_into_domain(vec![1.3, 0.0], &[0.8, 0.0]);
        assert!((y[0] - 1.0).abs() < 1e-12 && y[1] == 0.0);
    }
}
