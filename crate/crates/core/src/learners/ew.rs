//! Exponential weights over finite expert sets.

use rand::Rng;

use super::Learner;
use crate::coord::Coord;
use crate::dist::sample_categorical;
use crate::domain::{FunctionClass, Hypothesis, Point, ThresholdGrid};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Largest discretization accepted by [`discretized_ew_learner`] (exclusive).
pub const MAX_DISCRETIZATION: f64 = 1e8;

/// `w_i <- w_i exp(-eta l_i)`, renormalized. Falls back to log-space when
/// every product underflows.
pub fn ew_step(weights: &[f64], losses: &[f64], eta: f64) -> Vec<f64> {
    assert_eq!(weights.len(), losses.len());
    let mut next: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(w, l)| w * (-eta * l).exp())
        .collect();
    let total: f64 = next.iter().sum();
    if total > 0.0 && total.is_finite() {
        for w in &mut next {
            *w /= total;
        }
        return next;
    }
    let logs: Vec<f64> = weights
        .iter()
        .zip(losses)
        .map(|(w, l)| {
            if *w > 0.0 {
                w.ln() - eta * l
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut next: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = next.iter().sum();
    for w in &mut next {
        *w /= total;
    }
    next
}

/// Hedge tuning `sqrt(8 ln N / T)`.
pub fn hedge_eta(n_experts: f64, horizon: usize) -> f64 {
    (8.0 * n_experts.ln() / horizon as f64).sqrt()
}

/// Exponential weights over every hypothesis of a finite class, with dense
/// weights.
#[derive(Debug, Clone)]
pub struct DenseEw {
    class: FunctionClass,
    weights: Vec<f64>,
    eta: f64,
}

impl DenseEw {
    pub fn new(class: FunctionClass, eta: f64) -> Result<Self> {
        let n = match class.cardinality() {
            Some(n) if n <= 1 << 20 => n as usize,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "dense exponential weights need a finite class of at most 2^20 experts, got {}",
                    class.variant_name()
                )))
            }
        };
        if eta.is_nan() || eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "learning rate {eta} must be nonnegative"
            )));
        }
        Ok(Self {
            class,
            weights: vec![1.0 / n as f64; n],
            eta,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn expert_losses(&self, x: &Point) -> Result<Vec<f64>> {
        (0..self.weights.len())
            .map(|i| self.class.evaluate(&Hypothesis::Index(i), x))
            .collect()
    }
}

impl Learner for DenseEw {
    fn name(&self) -> &str {
        "ew"
    }

    fn is_randomized(&self) -> bool {
        true
    }

    fn draw(&self, rng: &mut SimRng) -> Hypothesis {
        Hypothesis::Index(sample_categorical(&self.weights, rng))
    }

    fn loss(&self, h: &Hypothesis, x: &Point) -> Result<f64> {
        self.class.evaluate(h, x)
    }

    fn expected_loss(&self, x: &Point) -> Result<f64> {
        Ok(self
            .expert_losses(x)?
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| l * w)
            .sum())
    }

    fn update(&mut self, x: &Point) -> Result<()> {
        let losses = self.expert_losses(x)?;
        self.weights = ew_step(&self.weights, &losses, self.eta);
        Ok(())
    }

    fn prob_predict_one(&self, z: Coord) -> Option<f64> {
        let FunctionClass::ThresholdGrid(grid) = &self.class else {
            return None;
        };
        let k = grid.count_at_or_below(z) as usize;
        Some(self.weights[k..].iter().sum())
    }
}

/// Exponential weights over a threshold grid of any resolution.
///
/// On a threshold move every expert `i < k` (threshold at or below `z`)
/// predicts 0 and every `i >= k` predicts 1, so cumulative losses are
/// constant on index ranges. The learner keeps those ranges as segments,
/// one more per round at most.
#[derive(Debug, Clone)]
pub struct GridEw {
    grid: ThresholdGrid,
    eta: f64,
    /// `(first index, cumulative loss)`, sorted by index.
    segments: Vec<(u64, f64)>,
    /// Normalized segment probabilities, cached after each update.
    probs: Vec<f64>,
}

impl GridEw {
    pub fn new(grid: ThresholdGrid, eta: f64) -> Result<Self> {
        if eta.is_nan() || eta < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "learning rate {eta} must be nonnegative"
            )));
        }
        Ok(Self {
            grid,
            eta,
            segments: vec![(0, 0.0)],
            probs: vec![1.0],
        })
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    fn seg_len(&self, k: usize) -> u64 {
        let end = self
            .segments
            .get(k + 1)
            .map_or(self.grid.resolution(), |s| s.0);
        end - self.segments[k].0
    }

    fn refresh(&mut self) {
        let top = self
            .segments
            .iter()
            .map(|s| -self.eta * s.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = (0..self.segments.len())
            .map(|k| self.seg_len(k) as f64 * (-self.eta * self.segments[k].1 - top).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        self.probs = raw.into_iter().map(|w| w / total).collect();
    }

    /// Probability mass on experts with index at least `k`.
    fn mass_from(&self, k: u64) -> f64 {
        let mut mass = 0.0;
        for (j, (start, _)) in self.segments.iter().enumerate() {
            let len = self.seg_len(j);
            let end = start + len;
            if end <= k {
                continue;
            }
            if *start >= k {
                mass += self.probs[j];
            } else {
                mass += self.probs[j] * (end - k) as f64 / len as f64;
            }
        }
        mass.min(1.0)
    }

    /// Cumulative loss of expert `i` so far.
    pub fn expert_loss(&self, i: u64) -> f64 {
        let k = self.segments.partition_point(|s| s.0 <= i) - 1;
        self.segments[k].1
    }

    /// Probability of expert `i`.
    pub fn expert_prob(&self, i: u64) -> f64 {
        let k = self.segments.partition_point(|s| s.0 <= i) - 1;
        self.probs[k] / self.seg_len(k) as f64
    }
}

fn threshold_move(x: &Point) -> Result<(Coord, f64, f64)> {
    let (base, label) = x.split_label();
    let z = match base {
        Point::Scalar(z) => *z,
        other => {
            return Err(Error::DomainMismatch {
                class: "ThresholdGrid",
                point: other.to_string(),
            })
        }
    };
    Ok(match label {
        Some(y) => (z, y.abs(), (1.0 - y).abs()),
        None => (z, 0.0, 1.0),
    })
}

impl Learner for GridEw {
    fn name(&self) -> &str {
        "ew_grid"
    }

    fn is_randomized(&self) -> bool {
        true
    }

    fn draw(&self, rng: &mut SimRng) -> Hypothesis {
        let k = sample_categorical(&self.probs, rng);
        let offset = rng.gen_range(0..self.seg_len(k));
        Hypothesis::Index((self.segments[k].0 + offset) as usize)
    }

    fn loss(&self, h: &Hypothesis, x: &Point) -> Result<f64> {
        FunctionClass::ThresholdGrid(self.grid).evaluate(h, x)
    }

    fn expected_loss(&self, x: &Point) -> Result<f64> {
        let (z, c0, c1) = threshold_move(x)?;
        let p1 = self.mass_from(self.grid.count_at_or_below(z));
        Ok(p1 * c1 + (1.0 - p1) * c0)
    }

    fn update(&mut self, x: &Point) -> Result<()> {
        let (z, c0, c1) = threshold_move(x)?;
        let k = self.grid.count_at_or_below(z);
        if k > 0 && k < self.grid.resolution() {
            let pos = self.segments.partition_point(|s| s.0 <= k);
            if self.segments[pos - 1].0 != k {
                let loss = self.segments[pos - 1].1;
                self.segments.insert(pos, (k, loss));
            }
        }
        for s in &mut self.segments {
            s.1 += if s.0 < k { c0 } else { c1 };
        }
        // merge neighbours with equal loss
        self.segments.dedup_by(|b, a| a.1 == b.1);
        self.refresh();
        Ok(())
    }

    fn prob_predict_one(&self, z: Coord) -> Option<f64> {
        Some(self.mass_from(self.grid.count_at_or_below(z)))
    }
}

/// Discretization chosen for a smoothed threshold game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Exponent with `N = T^a`.
    pub exponent: f64,
    pub resolution: u64,
    /// The prescribed exponent exceeded the cap and was lowered.
    pub capped: bool,
}

fn check_smoothed_params(horizon: usize, gamma: f64) -> Result<()> {
    if horizon < 2 {
        return Err(Error::InvalidParameter(format!(
            "horizon {horizon} must be at least 2"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "noise width {gamma} not in (0, 1]"
        )));
    }
    Ok(())
}

/// Exponent `a = 3 + ln(1/gamma) / ln T`.
pub fn discretization_exponent(horizon: usize, gamma: f64) -> f64 {
    3.0 + (1.0 / gamma).ln() / (horizon as f64).ln()
}

/// Exponential weights on the grid of `N = ceil(T^a)` thresholds with
/// margin `gamma / 2`, `a = 3 + ln(1/gamma)/ln T`, and Hedge tuning.
/// Fails when `N` reaches [`MAX_DISCRETIZATION`], reporting the largest
/// feasible exponent.
pub fn discretized_ew_learner(horizon: usize, gamma: f64) -> Result<(GridEw, Discretization)> {
    check_smoothed_params(horizon, gamma)?;
    let a = discretization_exponent(horizon, gamma);
    // guard against powf rounding just above an integer
    let n = ((horizon as f64).powf(a) * (1.0 - 1e-12)).ceil();
    if n >= MAX_DISCRETIZATION {
        return Err(Error::GridTooLarge {
            requested: n,
            cap: MAX_DISCRETIZATION,
            max_exponent: (MAX_DISCRETIZATION - 1.0).ln() / (horizon as f64).ln(),
        });
    }
    build_discretized(horizon, gamma, a, n as u64, false)
}

/// Like [`discretized_ew_learner`], but lowers the exponent to fit under
/// the cap instead of failing (`N = 10^8 - 1`).
pub fn discretized_ew_learner_capped(
    horizon: usize,
    gamma: f64,
) -> Result<(GridEw, Discretization)> {
    match discretized_ew_learner(horizon, gamma) {
        Err(Error::GridTooLarge { max_exponent, .. }) => build_discretized(
            horizon,
            gamma,
            max_exponent,
            MAX_DISCRETIZATION as u64 - 1,
            true,
        ),
        other => other,
    }
}

fn build_discretized(
    horizon: usize,
    gamma: f64,
    a: f64,
    n: u64,
    capped: bool,
) -> Result<(GridEw, Discretization)> {
    // at gamma = 1 the margin would close the interval; keep a sliver open
    let margin = (gamma / 2.0).min(0.5 - 1e-6);
    let grid = ThresholdGrid::new(n, margin)?;
    let learner = GridEw::new(grid, hedge_eta(n as f64, horizon))?;
    Ok((
        learner,
        Discretization {
            exponent: a,
            resolution: n,
            capped,
        },
    ))
}
