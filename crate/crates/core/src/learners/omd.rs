//! Mirror descent on linear games.

use serde::{Deserialize, Serialize};

use super::Learner;
use crate::domain::{l2_norm, BallNorm, FunctionClass, Hypothesis, Point};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    /// `1/2 |f|^2`, 1-strongly convex w.r.t. l2.
    HalfSquaredEuclidean,
    /// `sum_i f_i ln(d f_i)`, 1-strongly convex w.r.t. l1 on the simplex.
    NegativeEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    /// Strong convexity `lambda`.
    pub strong_convexity: f64,
    /// `R^2 >= sup_F Psi`: the squared ball radius, or `ln d` on the simplex.
    pub radius_sq: f64,
}

impl Regularizer {
    pub fn euclidean(radius: f64) -> Self {
        Self {
            kind: RegularizerKind::HalfSquaredEuclidean,
            strong_convexity: 1.0,
            radius_sq: radius * radius,
        }
    }

    pub fn entropic(dimension: usize) -> Self {
        Self {
            kind: RegularizerKind::NegativeEntropy,
            strong_convexity: 1.0,
            radius_sq: (dimension as f64).ln(),
        }
    }

    /// Regularizer matching a class: Euclidean on l2 balls, entropic on the simplex.
    pub fn for_class(class: &FunctionClass) -> Result<Self> {
        match class {
            FunctionClass::LinearBall {
                radius,
                norm: BallNorm::Euclidean,
                ..
            } => Ok(Self::euclidean(*radius)),
            FunctionClass::Simplex { dimension } => Ok(Self::entropic(*dimension)),
            other => Err(Error::InvalidParameter(format!(
                "no mirror map for {}",
                other.variant_name()
            ))),
        }
    }

    fn check(&self, class: &FunctionClass) -> Result<()> {
        let ok = matches!(
            (self.kind, class),
            (
                RegularizerKind::HalfSquaredEuclidean,
                FunctionClass::LinearBall {
                    norm: BallNorm::Euclidean,
                    ..
                }
            ) | (
                RegularizerKind::NegativeEntropy,
                FunctionClass::Simplex { .. }
            )
        );
        if ok && self.strong_convexity > 0.0 && self.radius_sq >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{:?} regularizer does not fit {}",
                self.kind,
                class.variant_name()
            )))
        }
    }

    /// `R sqrt(lambda) / sqrt(budget)`, with `budget` bounding the sum of
    /// squared dual norms of the (hint-corrected) gradients.
    pub fn tuned_eta(&self, budget: f64) -> f64 {
        if budget <= 0.0 {
            return 1.0;
        }
        (self.radius_sq * self.strong_convexity).sqrt() / budget.sqrt()
    }
}

/// One mirror step with gradient `g`: projected gradient step on the
/// Euclidean ball, multiplicative update on the simplex.
pub fn omd_step(point: &[f64], g: &[f64], eta: f64, reg: &Regularizer) -> Vec<f64> {
    match reg.kind {
        RegularizerKind::HalfSquaredEuclidean => {
            let mut y: Vec<f64> = point.iter().zip(g).map(|(f, gi)| f - eta * gi).collect();
            let radius = reg.radius_sq.sqrt();
            let n = l2_norm(&y);
            if n > radius {
                for v in &mut y {
                    *v *= radius / n;
                }
            }
            y
        }
        RegularizerKind::NegativeEntropy => {
            let logs: Vec<f64> = point
                .iter()
                .zip(g)
                .map(|(f, gi)| {
                    if *f > 0.0 {
                        f.ln() - eta * gi
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = w.iter().sum();
            for v in &mut w {
                *v /= total;
            }
            w
        }
    }
}

fn vector_of(x: &Point, dimension: usize) -> Result<&[f64]> {
    match x {
        Point::Vector(v) if v.len() == dimension => Ok(v),
        other => Err(Error::DomainMismatch {
            class: "LinearBall/Simplex",
            point: other.to_string(),
        }),
    }
}

fn start_point(class: &FunctionClass) -> Vec<f64> {
    match class.default_hypothesis() {
        Hypothesis::Vector(v) => v,
        _ => unreachable!("linear classes start from a vector"),
    }
}

/// Mirror descent `f_{t+1} = step(f_t, x_t)`.
#[derive(Debug, Clone)]
pub struct Omd {
    class: FunctionClass,
    reg: Regularizer,
    eta: f64,
    point: Vec<f64>,
}

impl Omd {
    pub fn new(class: FunctionClass, reg: Regularizer, eta: f64) -> Result<Self> {
        reg.check(&class)?;
        let point = start_point(&class);
        Ok(Self {
            class,
            reg,
            eta,
            point,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }
}

impl Learner for Omd {
    fn name(&self) -> &str {
        "omd"
    }

    fn is_randomized(&self) -> bool {
        false
    }

    fn draw(&self, _rng: &mut SimRng) -> Hypothesis {
        Hypothesis::Vector(self.point.clone())
    }

    fn loss(&self, h: &Hypothesis, x: &Point) -> Result<f64> {
        self.class.evaluate(h, x)
    }

    fn expected_loss(&self, x: &Point) -> Result<f64> {
        self.class
            .evaluate(&Hypothesis::Vector(self.point.clone()), x)
    }

    fn update(&mut self, x: &Point) -> Result<()> {
        let g = vector_of(x, self.point.len())?;
        self.point = omd_step(&self.point, g, self.eta, &self.reg);
        debug_assert!(self.class.contains(&Hypothesis::Vector(self.point.clone())));
        Ok(())
    }

    fn mean_vector(&self) -> Option<Vec<f64>> {
        Some(self.point.clone())
    }
}

/// Prediction `M_t` of the next move from past moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hint {
    Zero,
    /// Mean of the moves so far.
    RunningMean,
    /// The previous move.
    Previous,
}

/// Optimistic mirror descent: plays `f_t = step(h_{t-1}, M_t)` and updates
/// `h_t = step(h_{t-1}, x_t)`, so only the surprise `x_t - M_t` costs regret.
#[derive(Debug, Clone)]
pub struct OptimisticOmd {
    class: FunctionClass,
    reg: Regularizer,
    eta: f64,
    hint: Hint,
    base: Vec<f64>,
    played: Vec<f64>,
    sum: Vec<f64>,
    last: Vec<f64>,
    rounds: usize,
}

impl OptimisticOmd {
    pub fn new(class: FunctionClass, reg: Regularizer, eta: f64, hint: Hint) -> Result<Self> {
        reg.check(&class)?;
        let base = start_point(&class);
        let d = base.len();
        let mut out = Self {
            class,
            reg,
            eta,
            hint,
            played: base.clone(),
            base,
            sum: vec![0.0; d],
            last: vec![0.0; d],
            rounds: 0,
        };
        out.replan();
        Ok(out)
    }

    pub fn current_hint(&self) -> Vec<f64> {
        match (self.hint, self.rounds) {
            (Hint::Zero, _) | (_, 0) => vec![0.0; self.base.len()],
            (Hint::RunningMean, n) => self.sum.iter().map(|s| s / n as f64).collect(),
            (Hint::Previous, _) => self.last.clone(),
        }
    }

    fn replan(&mut self) {
        let m = self.current_hint();
        self.played = omd_step(&self.base, &m, self.eta, &self.reg);
    }
}

impl Learner for OptimisticOmd {
    fn name(&self) -> &str {
        "optimistic_omd"
    }

    fn is_randomized(&self) -> bool {
        false
    }

    fn draw(&self, _rng: &mut SimRng) -> Hypothesis {
        Hypothesis::Vector(self.played.clone())
    }

    fn loss(&self, h: &Hypothesis, x: &Point) -> Result<f64> {
        self.class.evaluate(h, x)
    }

    fn expected_loss(&self, x: &Point) -> Result<f64> {
        self.class
            .evaluate(&Hypothesis::Vector(self.played.clone()), x)
    }

    fn update(&mut self, x: &Point) -> Result<()> {
        let g = vector_of(x, self.base.len())?.to_vec();
        self.base = omd_step(&self.base, &g, self.eta, &self.reg);
        for (s, v) in self.sum.iter_mut().zip(&g) {
            *s += v;
        }
        self.last = g;
        self.rounds += 1;
        self.replan();
        debug_assert!(self
            .class
            .contains(&Hypothesis::Vector(self.played.clone())));
        Ok(())
    }

    fn mean_vector(&self) -> Option<Vec<f64>> {
        Some(self.played.clone())
    }
}
