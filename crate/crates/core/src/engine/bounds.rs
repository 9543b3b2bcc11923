//! Closed-form regret bounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::spec::{AdversarySpec, ExperimentSpec};
use crate::adversaries::SigmaSchedule;
use crate::domain::{BallNorm, FunctionClass, Protocol};
use crate::error::{Error, Result};

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {v} must be a nonnegative real"
        )))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "strong convexity {lambda} must be positive"
        )))
    }
}

/// `min_{alpha > 0} 2R^2/alpha + (alpha/lambda) sum sigma_t^2
/// = 2 sqrt(2) R sqrt(sum sigma_t^2 / lambda)`.
pub fn variance_bound(radius: f64, lambda: f64, sigma: &[f64]) -> Result<f64> {
    check_nonneg("R", radius)?;
    check_lambda(lambda)?;
    for s in sigma {
        check_nonneg("sigma", *s)?;
    }
    let ss: f64 = sigma.iter().map(|s| s * s).sum();
    Ok(2.0 * 2f64.sqrt() * radius * (ss / lambda).sqrt())
}

/// Simplex flavor with `R^2 = ln d`.
pub fn variance_bound_simplex(dimension: usize, sigma: &[f64]) -> Result<f64> {
    variance_bound(simplex_radius(dimension)?, 1.0, sigma)
}

/// `2 R delta sqrt(2T / lambda)`.
pub fn slow_change_bound(radius: f64, lambda: f64, delta: f64, horizon: usize) -> Result<f64> {
    check_nonneg("R", radius)?;
    check_nonneg("delta", delta)?;
    check_lambda(lambda)?;
    Ok(2.0 * radius * delta * (2.0 * horizon as f64 / lambda).sqrt())
}

/// `2 delta sqrt(2 T ln d)`.
pub fn slow_change_bound_simplex(dimension: usize, delta: f64, horizon: usize) -> Result<f64> {
    slow_change_bound(simplex_radius(dimension)?, 1.0, delta, horizon)
}

/// `2 + sqrt(2T (4 ln T + ln(1/gamma)))`.
pub fn smoothed_threshold_bound(horizon: usize, gamma: f64) -> Result<f64> {
    if horizon < 2 || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "smoothed bound needs T >= 2 and gamma in (0, 1], got T = {horizon}, gamma = {gamma}"
        )));
    }
    let t = horizon as f64;
    Ok(2.0 + (2.0 * t * (4.0 * t.ln() + (1.0 / gamma).ln())).sqrt())
}

fn simplex_radius(dimension: usize) -> Result<f64> {
    if dimension == 0 {
        return Err(Error::InvalidParameter(
            "simplex dimension must be positive".into(),
        ));
    }
    Ok((dimension as f64).ln().sqrt())
}

/// A bound with its constants fixed; [`Bound::value_at`] evaluates it at
/// any horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum Bound {
    /// `radius_sq` is `R^2` (`ln d` on the simplex, where `dimension` is set).
    Variance {
        radius_sq: f64,
        lambda: f64,
        sigma: SigmaSchedule,
        dimension: Option<usize>,
    },
    SlowChange {
        radius_sq: f64,
        lambda: f64,
        delta: f64,
        dimension: Option<usize>,
    },
    SmoothedThreshold {
        gamma: f64,
    },
}

/// Bound value and the parameters it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTrace {
    pub id: String,
    pub value: f64,
    pub params: BTreeMap<String, Value>,
}

impl Bound {
    pub fn id(&self) -> &'static str {
        match self {
            Bound::Variance { .. } => "variance",
            Bound::SlowChange { .. } => "slow_change",
            Bound::SmoothedThreshold { .. } => "smoothed_threshold",
        }
    }

    pub fn value_at(&self, horizon: usize) -> Result<f64> {
        match self {
            Bound::Variance {
                radius_sq,
                lambda,
                sigma,
                ..
            } => {
                let s: Vec<f64> = (1..=horizon).map(|t| sigma.at(t)).collect();
                variance_bound(radius_sq.sqrt(), *lambda, &s)
            }
            Bound::SlowChange {
                radius_sq,
                lambda,
                delta,
                ..
            } => slow_change_bound(radius_sq.sqrt(), *lambda, *delta, horizon),
            Bound::SmoothedThreshold { gamma } => smoothed_threshold_bound(horizon, *gamma),
        }
    }

    pub fn trace(&self, horizon: usize) -> Result<BoundTrace> {
        let mut params = BTreeMap::new();
        params.insert("T".to_string(), json!(horizon));
        match self {
            Bound::Variance {
                radius_sq,
                lambda,
                sigma,
                dimension,
            } => {
                params.insert("R".into(), json!(radius_sq.sqrt()));
                params.insert("lambda".into(), json!(lambda));
                params.insert(
                    "sigma".into(),
                    serde_json::to_value(sigma).expect("schedule serializes"),
                );
                params.insert("sum_sigma_sq".into(), json!(sigma.sum_sq(horizon)));
                if let Some(d) = dimension {
                    params.insert("d".into(), json!(d));
                }
            }
            Bound::SlowChange {
                radius_sq,
                lambda,
                delta,
                dimension,
            } => {
                params.insert("R".into(), json!(radius_sq.sqrt()));
                params.insert("lambda".into(), json!(lambda));
                params.insert("delta".into(), json!(delta));
                if let Some(d) = dimension {
                    params.insert("d".into(), json!(d));
                }
            }
            Bound::SmoothedThreshold { gamma } => {
                params.insert("gamma".into(), json!(gamma));
            }
        }
        Ok(BoundTrace {
            id: self.id().to_string(),
            value: self.value_at(horizon)?,
            params,
        })
    }

    /// Errors unless the game is one the bound speaks about.
    pub fn check_game(&self, game: &ExperimentSpec) -> Result<()> {
        let mismatch = |reason: String| {
            Err(Error::BoundMismatch {
                bound: self.id().to_string(),
                reason,
            })
        };
        let class = game.class.build()?;
        match self {
            Bound::Variance {
                radius_sq,
                dimension,
                ..
            }
            | Bound::SlowChange {
                radius_sq,
                dimension,
                ..
            } => {
                let (r2, d) = match class {
                    FunctionClass::LinearBall {
                        radius,
                        norm: BallNorm::Euclidean,
                        ..
                    } => (radius * radius, None),
                    FunctionClass::Simplex { dimension } => {
                        ((dimension as f64).ln(), Some(dimension))
                    }
                    other => {
                        return mismatch(format!(
                            "class {} is neither a Euclidean ball nor a simplex",
                            other.variant_name()
                        ))
                    }
                };
                if (r2 - radius_sq).abs() > 1e-12 * (1.0 + r2) || d != *dimension {
                    return mismatch(format!(
                        "bound radius^2 {radius_sq} does not match the class ({r2})"
                    ));
                }
                let Some(spec) = game.adversary.constraint_spec() else {
                    return mismatch("the adversary is unconstrained".into());
                };
                match (self, spec) {
                    (
                        Bound::Variance { sigma, .. },
                        super::spec::ConstraintSpec::Variance {
                            sigma: game_sigma, ..
                        },
                    ) => {
                        if (1..=game.horizon).any(|t| game_sigma.at(t) > sigma.at(t) + 1e-12) {
                            return mismatch(
                                "the game's variance budget exceeds the bound's".into(),
                            );
                        }
                    }
                    (
                        Bound::SlowChange { delta, .. },
                        super::spec::ConstraintSpec::SlowChange {
                            delta: game_delta, ..
                        },
                    ) => {
                        if *game_delta > delta + 1e-12 {
                            return mismatch(format!(
                                "the game's delta {game_delta} exceeds the bound's {delta}"
                            ));
                        }
                    }
                    _ => return mismatch("the adversary's constraint is of another kind".into()),
                }
            }
            Bound::SmoothedThreshold { gamma } => {
                if !matches!(
                    class,
                    FunctionClass::ThresholdInterval { .. } | FunctionClass::ThresholdGrid(_)
                ) {
                    return mismatch(format!(
                        "class {} is not a threshold class",
                        class.variant_name()
                    ));
                }
                if game.game()?.protocol == Protocol::Plain {
                    return mismatch("the game is not supervised".into());
                }
                if let AdversarySpec::Smoothed { gamma: g, .. } = &game.adversary {
                    if *g + 1e-15 < *gamma {
                        return mismatch(format!(
                            "noise width {g} is below the bound's gamma {gamma}"
                        ));
                    }
                }
                smoothed_threshold_bound(game.horizon, *gamma)?;
            }
        }
        Ok(())
    }
}
