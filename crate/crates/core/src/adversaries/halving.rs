use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{Adversary, Constraint, Move};
use crate::coord::Coord;
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::rng::SimRng;

/// Threshold-game adversary that bisects the interval `(lo, hi]` of
/// thresholds consistent with its labels so far. Each move sits at the
/// midpoint and carries the label the learner considers less likely, so
/// the learner loses at least 1/2 per round while some threshold stays
/// perfect.
#[derive(Debug, Clone)]
pub struct Halving {
    lo: Coord,
    hi: Coord,
    restart: bool,
    restarts: usize,
}

impl Default for Halving {
    fn default() -> Self {
        Self {
            lo: Coord::ZERO,
            hi: Coord::ONE,
            restart: false,
            restarts: 0,
        }
    }
}

impl Halving {
    /// Fails once the interval can no longer be split.
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts over from `(0, 1]` once the interval can no longer be split,
    /// for games longer than the coordinate precision. Only meaningful
    /// under noise: after a restart no threshold is consistent with every
    /// label.
    pub fn restarting() -> Self {
        Self {
            restart: true,
            ..Self::default()
        }
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn version_space(&self) -> (Coord, Coord) {
        (self.lo, self.hi)
    }
}

impl Adversary for Halving {
    fn name(&self) -> &str {
        "halving"
    }

    fn next_move(&mut self, learner: &dyn Learner, _rng: &mut SimRng) -> Result<Move> {
        let mut z = self.lo.midpoint(self.hi);
        if z <= self.lo {
            if !self.restart {
                return Err(Error::InvalidSpec("halving version space exhausted".into()));
            }
            (self.lo, self.hi) = (Coord::ZERO, Coord::ONE);
            self.restarts += 1;
            z = self.lo.midpoint(self.hi);
        }
        // the loss against label 0 is the probability of predicting 1
        let p_one = learner.expected_loss(&Point::pair(z, 0.0))?;
        let y = if p_one <= 0.5 {
            self.lo = z;
            1.0
        } else {
            self.hi = z;
            0.0
        };
        Ok(Move::plain(Point::pair(z, y)))
    }
}

type NoiseFn = dyn Fn(&mut SimRng) -> f64 + Send + Sync;

/// Exogenous perturbation law.
#[derive(Clone)]
pub enum Noise {
    /// Uniform on `[-gamma/2, gamma/2]`.
    Uniform(f64),
    Custom(Arc<NoiseFn>),
}

impl fmt::Debug for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Uniform(g) => write!(f, "Uniform({g})"),
            Noise::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Noise {
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            Noise::Uniform(gamma) => gamma * (rng.gen::<f64>() - 0.5),
            Noise::Custom(f) => f(rng),
        }
    }
}

/// Wraps an adversary so the learner pays on `(z + s, y)` with fresh noise
/// `s` each round; labels are never perturbed.
pub struct Smoothed {
    inner: Box<dyn Adversary>,
    noise: Noise,
}

impl Smoothed {
    pub fn new(inner: Box<dyn Adversary>, noise: Noise) -> Result<Self> {
        if let Noise::Uniform(g) = noise {
            if !(g.is_finite() && (0.0..=2.0).contains(&g)) {
                return Err(Error::InvalidParameter(format!("noise width {g}")));
            }
        }
        Ok(Self { inner, noise })
    }

    pub fn uniform(inner: Box<dyn Adversary>, gamma: f64) -> Result<Self> {
        Self::new(inner, Noise::Uniform(gamma))
    }
}

/// `omega((z, y), s) = (z + s, y)`.
pub fn perturb(x: &Point, s: f64) -> Result<Point> {
    let shift = |z: &Coord| z.wrapping_add(Coord::from_f64(s));
    match x {
        Point::Scalar(z) => Ok(Point::Scalar(shift(z))),
        Point::Labeled { x: inner, y } => match inner.as_ref() {
            Point::Scalar(z) => Ok(Point::pair(shift(z), *y)),
            _ => Err(Error::DomainMismatch {
                class: "smoothed game",
                point: x.to_string(),
            }),
        },
        _ => Err(Error::DomainMismatch {
            class: "smoothed game",
            point: x.to_string(),
        }),
    }
}

impl Adversary for Smoothed {
    fn name(&self) -> &str {
        "smoothed"
    }

    fn next_move(&mut self, learner: &dyn Learner, rng: &mut SimRng) -> Result<Move> {
        let inner = self.inner.next_move(learner, rng)?;
        let s = self.noise.sample(rng);
        Ok(Move {
            realized: perturb(&inner.intended, s)?,
            intended: inner.intended,
            noise: Some(s),
        })
    }

    fn constraint(&self) -> &Constraint {
        self.inner.constraint()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{best_fixed_comparator, FunctionClass, ThresholdGrid};
    use crate::learners::{Ftl, GridEw};
    use crate::rng::rng_from_seed;
    use crate::stats::mean_and_se;

    fn grid_ew() -> GridEw {
        GridEw::new(ThresholdGrid::new(64, 0.0).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn bookkeeping() {
        let mut adv = Halving::new();
        // FTL on an empty history plays theta_0 = 1/65 and predicts 0 at 1/2
        let learner = Ftl::new(FunctionClass::threshold_grid(64, 0.0).unwrap());
        let mut rng = rng_from_seed(0);
        let m = adv.next_move(&learner, &mut rng).unwrap();
        assert_eq!(m.intended, Point::pair(0.5, 1.0));
        assert_eq!(adv.version_space(), (Coord::HALF, Coord::ONE));
        let m = adv.next_move(&learner, &mut rng).unwrap();
        assert_eq!(m.intended, Point::pair(0.75, 1.0));
    }

    #[test]
    fn exhaustion_errors_or_restarts() {
        let learner = Ftl::new(FunctionClass::threshold_grid(64, 0.0).unwrap());
        let mut rng = rng_from_seed(0);
        let mut strict = Halving::new();
        let mut looping = Halving::restarting();
        let mut failed_at = None;
        for t in 0..400 {
            looping.next_move(&learner, &mut rng).unwrap();
            if failed_at.is_none() && strict.next_move(&learner, &mut rng).is_err() {
                failed_at = Some(t);
            }
        }
        let t = failed_at.expect("precision runs out");
        assert!(t > 300, "{t}");
        assert_eq!(looping.restarts(), 1);
    }

    #[test]
    fn eight_rounds_cost_at_least_four() {
        let comparator = FunctionClass::threshold_interval(0.0).unwrap();
        for seed in 0..1000u64 {
            let mut rng = rng_from_seed(seed);
            let mut learner = grid_ew();
            let mut adv = Halving::new();
            let (mut expected, mut seq) = (0.0, Vec::new());
            for _ in 0..8 {
                let h = learner.draw(&mut rng);
                let m = adv.next_move(&learner, &mut rng).unwrap();
                expected += learner.expected_loss(&m.realized).unwrap();
                let _ = learner.loss(&h, &m.realized).unwrap();
                learner.update(&m.realized).unwrap();
                seq.push(m.realized);
            }
            assert!(expected >= 4.0 - 1e-12);
            assert_eq!(best_fixed_comparator(&comparator, &seq).unwrap().1, 0.0);
        }
    }

    #[test]
    fn halving_stays_exact_for_long_games() {
        let comparator = FunctionClass::threshold_interval(0.0).unwrap();
        let mut learner = Ftl::new(comparator.clone());
        let mut adv = Halving::new();
        let mut rng = rng_from_seed(1);
        let mut seq = Vec::new();
        for _ in 0..300 {
            let m = adv.next_move(&learner, &mut rng).unwrap();
            learner.update(&m.realized).unwrap();
            seq.push(m.realized);
        }
        assert_eq!(best_fixed_comparator(&comparator, &seq).unwrap().1, 0.0);
    }

    #[test]
    fn noise_moments_and_support() {
        let learner = grid_ew();
        let mut rng = rng_from_seed(5);
        let mut zero = Smoothed::uniform(Box::new(Halving::new()), 0.0).unwrap();
        let m = zero.next_move(&learner, &mut rng).unwrap();
        assert_eq!(m.realized, m.intended);

        let gamma = 0.2;
        let mut adv = Smoothed::uniform(Box::new(Halving::new()), gamma).unwrap();
        let mut s = Vec::new();
        for _ in 0..100_000 {
            let m = adv.next_move(&learner, &mut rng).unwrap();
            let dz = m
                .realized
                .threshold_z()
                .unwrap()
                .wrapping_sub(m.intended.threshold_z().unwrap())
                .to_f64();
            assert!(dz.abs() <= gamma / 2.0);
            assert_eq!(m.realized.split_label().1, m.intended.split_label().1);
            s.push(m.noise.unwrap());
            if s.len() % 200 == 0 {
                adv.inner = Box::new(Halving::new());
            }
        }
        let (m, se) = mean_and_se(&s);
        assert!(m.abs() <= 3.0 * se);
        let sq: Vec<f64> = s.iter().map(|v| (v - m).powi(2)).collect();
        let (var, var_se) = mean_and_se(&sq);
        assert!((var - gamma * gamma / 12.0).abs() <= 3.0 * var_se);
    }
}
