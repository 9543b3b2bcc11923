use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::domain::{l2_norm, sup_norm, Point};
use crate::error::{Error, Result};

/// Slack allowed when checking a constraint.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Norm a constraint ball is measured in (the dual norm of the game).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveNorm {
    L2,
    Sup,
}

impl MoveNorm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            MoveNorm::L2 => l2_norm(v),
            MoveNorm::Sup => sup_norm(v),
        }
    }

    /// Metric projection of `x` onto the ball `{y : |y - c| <= r}`.
    pub fn project(self, c: &[f64], r: f64, x: &[f64]) -> Vec<f64> {
        match self {
            MoveNorm::L2 => {
                let diff: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
                let n = l2_norm(&diff);
                if n <= r {
                    x.to_vec()
                } else {
                    c.iter()
                        .zip(&diff)
                        .map(|(ci, di)| ci + di * r / n)
                        .collect()
                }
            }
            MoveNorm::Sup => x
                .iter()
                .zip(c)
                .map(|(xi, ci)| xi.clamp(ci - r, ci + r))
                .collect(),
        }
    }
}

/// Per-round budgets `sigma_t`; a short list repeats its last entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSchedule {
    Constant(f64),
    PerRound(Vec<f64>),
}

impl SigmaSchedule {
    /// `sigma_t` for the 1-based round `t`.
    pub fn at(&self, t: usize) -> f64 {
        match self {
            SigmaSchedule::Constant(s) => *s,
            SigmaSchedule::PerRound(v) => v
                .get(t.saturating_sub(1))
                .or(v.last())
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// `sum_{t=1}^T sigma_t^2`.
    pub fn sum_sq(&self, horizon: usize) -> f64 {
        (1..=horizon).map(|t| self.at(t).powi(2)).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            SigmaSchedule::Constant(s) => s.is_finite() && *s >= 0.0,
            SigmaSchedule::PerRound(v) => {
                !v.is_empty() && v.iter().all(|s| s.is_finite() && *s >= 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "sigma schedule must be a nonempty list of nonnegative reals".into(),
            ))
        }
    }
}

type Predicate = dyn Fn(&[Point], &Point) -> bool + Send + Sync;
type Projector = dyn Fn(&[Point], &Point) -> Point + Send + Sync;

/// Restriction `C_t(x_1, ..., x_t) = 1` on the adversary's moves. The
/// built-in kinds leave the first move free.
#[derive(Clone, Default)]
pub enum Constraint {
    #[default]
    None,
    /// `|x_t - mean(x_{1:t-1})| <= sigma_t`.
    Variance {
        sigma: SigmaSchedule,
        norm: MoveNorm,
    },
    /// `|x_t - x_{t-1}| <= delta`.
    SlowChange { delta: f64, norm: MoveNorm },
    Custom {
        predicate: Arc<Predicate>,
        projector: Option<Arc<Projector>>,
    },
}

impl fmt::Debug for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::None => write!(f, "None"),
            Constraint::Variance { sigma, norm } => write!(f, "Variance({sigma:?}, {norm:?})"),
            Constraint::SlowChange { delta, norm } => write!(f, "SlowChange({delta}, {norm:?})"),
            Constraint::Custom { projector, .. } => {
                write!(f, "Custom(projector: {})", projector.is_some())
            }
        }
    }
}

fn vector(p: &Point) -> Result<&[f64]> {
    p.as_vector().ok_or_else(|| Error::DomainMismatch {
        class: "constraint",
        point: p.to_string(),
    })
}

impl Constraint {
    pub fn custom(
        predicate: impl Fn(&[Point], &Point) -> bool + Send + Sync + 'static,
        projector: Option<Arc<Projector>>,
    ) -> Self {
        Constraint::Custom {
            predicate: Arc::new(predicate),
            projector,
        }
    }

    /// Center, radius and norm of the feasible ball for the move following
    /// `history`; `None` when the move is unrestricted (or the constraint
    /// is custom).
    pub fn ball(&self, history: &[Point]) -> Result<Option<(Vec<f64>, f64, MoveNorm)>> {
        let Some(last) = history.last() else {
            return Ok(None);
        };
        match self {
            Constraint::Variance { sigma, norm } => {
                let mut c = vec![0.0; vector(last)?.len()];
                for p in history {
                    let v = vector(p)?;
                    if v.len() != c.len() {
                        return Err(Error::DomainMismatch {
                            class: "constraint",
                            point: p.to_string(),
                        });
                    }
                    for (ci, vi) in c.iter_mut().zip(v) {
                        *ci += vi;
                    }
                }
                let n = history.len() as f64;
                c.iter_mut().for_each(|ci| *ci /= n);
                Ok(Some((c, sigma.at(history.len() + 1), *norm)))
            }
            Constraint::SlowChange { delta, norm } => {
                Ok(Some((vector(last)?.to_vec(), *delta, *norm)))
            }
            Constraint::None | Constraint::Custom { .. } => Ok(None),
        }
    }

    /// Whether `x` may follow `history`.
    pub fn holds(&self, history: &[Point], x: &Point) -> Result<bool> {
        if let Constraint::Custom { predicate, .. } = self {
            return Ok(predicate(history, x));
        }
        match self.ball(history)? {
            None => Ok(true),
            Some((c, r, norm)) => {
                let v = vector(x)?;
                if v.len() != c.len() {
                    return Err(Error::DomainMismatch {
                        class: "constraint",
                        point: x.to_string(),
                    });
                }
                let diff: Vec<f64> = v.iter().zip(&c).map(|(a, b)| a - b).collect();
                Ok(norm.of(&diff) <= r + CONSTRAINT_TOL)
            }
        }
    }

    /// The proposal if feasible, else its projection onto the feasible set.
    pub fn project(&self, history: &[Point], proposal: &Point) -> Result<Point> {
        if self.holds(history, proposal)? {
            return Ok(proposal.clone());
        }
        match self {
            Constraint::Custom {
                projector: Some(p), ..
            } => {
                let out = p(history, proposal);
                if self.holds(history, &out)? {
                    Ok(out)
                } else {
                    Err(Error::Infeasible(
                        "custom projector returned an infeasible point".into(),
                    ))
                }
            }
            Constraint::Custom {
                projector: None, ..
            } => Err(Error::Infeasible(
                "the custom constraint has no projector".into(),
            )),
            _ => {
                let (c, r, norm) = self
                    .ball(history)?
                    .expect("infeasible moves only arise under a ball");
                Ok(Point::Vector(norm.project(&c, r, vector(proposal)?)))
            }
        }
    }

    /// Total of the squared per-round budgets over `horizon` rounds, round 1
    /// counting as a full unit-ball move.
    pub fn surprise_budget(&self, horizon: usize) -> Option<f64> {
        match self {
            Constraint::Variance { sigma, .. } => {
                Some(1.0 + (2..=horizon).map(|t| sigma.at(t).powi(2)).sum::<f64>())
            }
            Constraint::SlowChange { delta, .. } => {
                Some(1.0 + delta * delta * horizon.saturating_sub(1) as f64)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Point {
        Point::Vector(x.to_vec())
    }

    #[test]
    fn projection_examples() {
        let var0 = Constraint::Variance {
            sigma: SigmaSchedule::Constant(0.0),
            norm: MoveNorm::L2,
        };
        let hist = [v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        assert_eq!(
            var0.project(&hist, &v(&[-0.7, 0.2])).unwrap(),
            v(&[0.5, 0.5])
        );

        let slow = Constraint::SlowChange {
            delta: 0.1,
            norm: MoveNorm::L2,
        };
        assert_eq!(
            slow.project(&[v(&[0.0, 0.0])], &v(&[1.0, 0.0])).unwrap(),
            v(&[0.1, 0.0])
        );

        let var = Constraint::Variance {
            sigma: SigmaSchedule::Constant(0.5),
            norm: MoveNorm::L2,
        };
        assert_eq!(
            var.project(&[v(&[1.0, 0.0])], &v(&[1.0, 0.3])).unwrap(),
            v(&[1.0, 0.3])
        );

        let sup = Constraint::SlowChange {
            delta: 0.1,
            norm: MoveNorm::Sup,
        };
        assert_eq!(
            sup.project(&[v(&[0.0, 0.0])], &v(&[0.5, -0.05])).unwrap(),
            v(&[0.1, -0.05])
        );
    }

    #[test]
    fn first_move_is_free() {
        let slow = Constraint::SlowChange {
            delta: 0.0,
            norm: MoveNorm::L2,
        };
        assert!(slow.holds(&[], &v(&[1.0, 0.0])).unwrap());
    }

    #[test]
    fn custom_without_projector_rejects_infeasible() {
        let c = Constraint::custom(|_, x| x.as_vector().is_some_and(|v| v[0] >= 0.0), None);
        assert!(c.project(&[], &v(&[0.5])).is_ok());
        assert!(c.project(&[], &v(&[-0.5])).is_err());
        let fix: Arc<Projector> = Arc::new(|_, x| {
            Point::Vector(x.as_vector().unwrap().iter().map(|a| a.abs()).collect())
        });
        let c = Constraint::custom(|_, x| x.as_vector().is_some_and(|v| v[0] >= 0.0), Some(fix));
        assert_eq!(c.project(&[], &v(&[-0.5])).unwrap(), v(&[0.5]));
    }

    #[test]
    fn schedules() {
        let s = SigmaSchedule::PerRound(vec![1.0, 0.5]);
        assert_eq!(s.at(1), 1.0);
        assert_eq!(s.at(7), 0.5);
        assert!((SigmaSchedule::Constant(0.1).sum_sq(100) - 1.0).abs() < 1e-12);
        assert!(SigmaSchedule::Constant(-1.0).validate().is_err());
    }
}
