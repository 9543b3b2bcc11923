//! Declarative experiment descriptions, shared by the config file and the API.

use serde::{Deserialize, Serialize};

use crate::adversaries::{
    Adversary, ConstrainedAdversary, Constraint, Halving, Hybrid, Iid, LabelPolicy, MoveNorm,
    Proposal, SigmaSchedule, Smoothed,
};
use crate::dist::PointDist;
use crate::domain::{BallNorm, FunctionClass, GameSpec, LossKind, Point, Protocol};
use crate::error::{Error, Result};
use crate::learners::{
    discretized_ew_learner, discretized_ew_learner_capped, hedge_eta, DenseEw, Ftl, GridEw, Hint,
    Learner, Omd, OptimisticOmd, Regularizer,
};

use super::bounds::Bound;

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn euclidean() -> BallNorm {
    BallNorm::Euclidean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    FiniteTable {
        rows: Vec<Vec<f64>>,
    },
    LinearBall {
        dimension: usize,
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "euclidean")]
        norm: BallNorm,
    },
    Simplex {
        dimension: usize,
    },
    ThresholdGrid {
        resolution: u64,
        #[serde(default)]
        margin: f64,
    },
    ThresholdInterval {
        #[serde(default)]
        margin: f64,
    },
}

impl ClassSpec {
    pub fn build(&self) -> Result<FunctionClass> {
        match self {
            ClassSpec::FiniteTable { rows } => FunctionClass::finite_table(rows.clone()),
            ClassSpec::LinearBall {
                dimension,
                radius,
                norm,
            } => FunctionClass::linear_ball(*dimension, *radius, *norm),
            ClassSpec::Simplex { dimension } => FunctionClass::simplex(*dimension),
            ClassSpec::ThresholdGrid { resolution, margin } => {
                FunctionClass::threshold_grid(*resolution, *margin)
            }
            ClassSpec::ThresholdInterval { margin } => FunctionClass::threshold_interval(*margin),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    /// Exactly one of `index`, `vector`, `z`; `y` adds a label.
    PointMass {
        #[serde(default)]
        index: Option<usize>,
        #[serde(default)]
        vector: Option<Vec<f64>>,
        #[serde(default)]
        z: Option<f64>,
        #[serde(default)]
        y: Option<f64>,
    },
    UniformIndex {
        n: usize,
    },
    Categorical {
        weights: Vec<f64>,
    },
    UniformScalar {
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    UniformSphere {
        dimension: usize,
    },
    UniformCube {
        dimension: usize,
    },
}

impl DistSpec {
    pub fn build(&self) -> Result<PointDist> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        match self {
            DistSpec::PointMass {
                index,
                vector,
                z,
                y,
            } => {
                let base = match (index, vector, z) {
                    (Some(i), None, None) => Point::Index(*i),
                    (None, Some(v), None) if !v.is_empty() => Point::Vector(v.clone()),
                    (None, None, Some(z)) if z.is_finite() && z.abs() < 8.0 => Point::scalar(*z),
                    _ => return bad("point_mass needs exactly one of index, vector, z".into()),
                };
                Ok(PointDist::PointMass(match y {
                    Some(y) => Point::Labeled {
                        x: Box::new(base),
                        y: *y,
                    },
                    None => base,
                }))
            }
            DistSpec::UniformIndex { n } if *n > 0 => Ok(PointDist::UniformIndex(*n)),
            DistSpec::Categorical { weights }
                if !weights.is_empty()
                    && weights.iter().all(|w| w.is_finite() && *w >= 0.0)
                    && weights.iter().sum::<f64>() > 0.0 =>
            {
                Ok(PointDist::Categorical(weights.clone()))
            }
            DistSpec::UniformScalar { lo, hi } if lo < hi && lo.abs() < 8.0 && hi.abs() <= 8.0 => {
                Ok(PointDist::UniformScalar { lo: *lo, hi: *hi })
            }
            DistSpec::UniformSphere { dimension } if *dimension > 0 => {
                Ok(PointDist::UniformSphere(*dimension))
            }
            DistSpec::UniformCube { dimension } if *dimension > 0 => {
                Ok(PointDist::UniformCube(*dimension))
            }
            other => bad(format!("invalid distribution parameters: {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    /// Exponential weights over a finite table or threshold grid (the game
    /// class unless `class` is given); `eta` defaults to Hedge tuning.
    Ew {
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        class: Option<ClassSpec>,
    },
    /// Exponential weights on the `T^a` grid for the smoothed threshold game.
    DiscretizedEw {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default = "yes")]
        capped: bool,
    },
    Ftl {
        #[serde(default)]
        class: Option<ClassSpec>,
    },
    Omd {
        #[serde(default)]
        eta: Option<f64>,
    },
    OptimisticOmd {
        #[serde(default = "running_mean")]
        hint: Hint,
        #[serde(default)]
        eta: Option<f64>,
    },
}

fn running_mean() -> Hint {
    Hint::RunningMean
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalKind {
    #[default]
    AntiLearner,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    #[default]
    Rademacher,
    OppositeMajority,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintSpec {
    None {},
    Variance {
        sigma: SigmaSchedule,
        #[serde(default)]
        norm: Option<MoveNorm>,
    },
    SlowChange {
        delta: f64,
        #[serde(default)]
        norm: Option<MoveNorm>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    Iid {
        dist: DistSpec,
    },
    /// Linear-game adversary under a constraint; proposals come from the
    /// anti-learner rule or, with `proposal = "iid"`, from `dist`.
    Constrained {
        constraint: ConstraintSpec,
        #[serde(default)]
        proposal: ProposalKind,
        #[serde(default)]
        dist: Option<DistSpec>,
    },
    Halving {},
    Smoothed {
        gamma: f64,
        /// Defaults to the halving adversary.
        #[serde(default)]
        inner: Option<Box<AdversarySpec>>,
    },
    RademacherLabels {
        x: DistSpec,
    },
    Hybrid {
        x: DistSpec,
        #[serde(default)]
        labels: LabelKind,
    },
}

impl AdversarySpec {
    fn is_supervised(&self) -> bool {
        match self {
            AdversarySpec::Halving {}
            | AdversarySpec::RademacherLabels { .. }
            | AdversarySpec::Hybrid { .. } => true,
            AdversarySpec::Smoothed { .. } => true,
            AdversarySpec::Iid { dist } => matches!(dist, DistSpec::PointMass { y: Some(_), .. }),
            AdversarySpec::Constrained { .. } => false,
        }
    }

    /// Noise width of a smoothed adversary.
    pub fn noise_width(&self) -> Option<f64> {
        match self {
            AdversarySpec::Smoothed { gamma, .. } => Some(*gamma),
            _ => None,
        }
    }

    pub fn constraint_spec(&self) -> Option<&ConstraintSpec> {
        match self {
            AdversarySpec::Constrained { constraint, .. } => Some(constraint),
            AdversarySpec::Smoothed {
                inner: Some(inner), ..
            } => inner.constraint_spec(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundSpec {
    /// `2 sqrt(2) R sqrt(sum sigma_t^2 / lambda)`, `R` from the class.
    Variance {
        #[serde(default = "one")]
        lambda: f64,
    },
    /// `2 R delta sqrt(2T / lambda)`.
    SlowChange {
        #[serde(default = "one")]
        lambda: f64,
    },
    /// `2 + sqrt(2T (4 ln T + ln(1/gamma)))`; `gamma` defaults to the
    /// adversary's noise width.
    SmoothedThreshold {
        #[serde(default)]
        gamma: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// Best fixed hypothesis for the whole horizon at every prefix.
    #[default]
    Fixed,
    /// Best hypothesis of each prefix (diagnostic).
    Prefix,
}

/// One experiment: game, players, replicates and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub id: String,
    pub horizon: usize,
    /// Comparator class.
    pub class: ClassSpec,
    pub learner: LearnerSpec,
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub bound: Option<BoundSpec>,
    #[serde(default = "one_usize")]
    pub replicates: usize,
    /// Master seed; replicate `r` uses `derive_seed(seed, r)`.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Record `E_{f ~ q_t} loss` instead of the loss of a drawn hypothesis.
    #[serde(default)]
    pub analytic: bool,
    #[serde(default)]
    pub regret: RegretMode,
}

impl ExperimentSpec {
    pub fn master_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn game(&self) -> Result<GameSpec> {
        let class = self.class.build()?;
        let (loss, protocol) = match (&self.adversary, self.adversary.is_supervised()) {
            (AdversarySpec::Smoothed { .. }, _) => (LossKind::Absolute, Protocol::Smoothed),
            (_, true) => (LossKind::Absolute, Protocol::Supervised),
            (_, false) => (LossKind::Linear, Protocol::Plain),
        };
        GameSpec::new(self.horizon, class, loss, protocol)
    }

    /// Builds every part once, so that errors surface before any run.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidSpec(format!(
                "{}: replicates must be at least 1",
                self.id
            )));
        }
        self.game()?;
        self.build_learner()?;
        self.build_adversary()?;
        self.resolve_bound()?;
        Ok(())
    }

    pub fn build_learner(&self) -> Result<Box<dyn Learner>> {
        let game_class = self.class.build()?;
        let own =
            |c: &Option<ClassSpec>| c.as_ref().map_or(Ok(game_class.clone()), ClassSpec::build);
        let t = self.horizon;
        Ok(match &self.learner {
            LearnerSpec::Ew { eta, class } => match own(class)? {
                FunctionClass::ThresholdGrid(g) => {
                    let eta = eta.unwrap_or_else(|| hedge_eta(g.resolution() as f64, t));
                    Box::new(GridEw::new(g, eta)?)
                }
                c @ FunctionClass::FiniteTable(_) => {
                    let eta =
                        eta.unwrap_or_else(|| hedge_eta(c.cardinality().unwrap_or(1) as f64, t));
                    Box::new(DenseEw::new(c, eta)?)
                }
                other => {
                    return Err(Error::InvalidSpec(format!(
                        "exponential weights need a finite table or threshold grid, not {}",
                        other.variant_name()
                    )))
                }
            },
            LearnerSpec::DiscretizedEw { gamma, capped } => {
                let gamma = gamma.or(self.adversary.noise_width()).ok_or_else(|| {
                    Error::InvalidSpec(
                        "discretized_ew needs gamma (or a smoothed adversary)".into(),
                    )
                })?;
                let (learner, _) = if *capped {
                    discretized_ew_learner_capped(t, gamma)?
                } else {
                    discretized_ew_learner(t, gamma)?
                };
                Box::new(learner)
            }
            LearnerSpec::Ftl { class } => Box::new(Ftl::new(own(class)?)),
            LearnerSpec::Omd { eta } => {
                let reg = Regularizer::for_class(&game_class)?;
                Box::new(Omd::new(
                    game_class,
                    reg,
                    eta.unwrap_or_else(|| reg.tuned_eta(t as f64)),
                )?)
            }
            LearnerSpec::OptimisticOmd { hint, eta } => {
                let reg = Regularizer::for_class(&game_class)?;
                let budget = self
                    .build_constraint()?
                    .surprise_budget(t)
                    .unwrap_or(t as f64);
                Box::new(OptimisticOmd::new(
                    game_class,
                    reg,
                    eta.unwrap_or_else(|| reg.tuned_eta(budget)),
                    *hint,
                )?)
            }
        })
    }

    /// Constraint norm and move domain of a linear game.
    fn linear_geometry(&self) -> Result<(MoveNorm, usize)> {
        match self.class.build()? {
            FunctionClass::LinearBall {
                dimension,
                norm: BallNorm::Euclidean,
                ..
            } => Ok((MoveNorm::L2, dimension)),
            FunctionClass::LinearBall {
                dimension,
                norm: BallNorm::SupDual,
                ..
            } => Ok((MoveNorm::Sup, dimension)),
            FunctionClass::Simplex { dimension } => Ok((MoveNorm::Sup, dimension)),
            other => Err(Error::InvalidSpec(format!(
                "constrained adversaries need a linear class, not {}",
                other.variant_name()
            ))),
        }
    }

    fn build_constraint(&self) -> Result<Constraint> {
        let Some(c) = self.adversary.constraint_spec() else {
            return Ok(Constraint::None);
        };
        let (default_norm, _) = self.linear_geometry()?;
        Ok(match c {
            ConstraintSpec::None {} => Constraint::None,
            ConstraintSpec::Variance { sigma, norm } => {
                sigma.validate()?;
                Constraint::Variance {
                    sigma: sigma.clone(),
                    norm: norm.unwrap_or(default_norm),
                }
            }
            ConstraintSpec::SlowChange { delta, norm } => {
                if !(delta.is_finite() && *delta >= 0.0) {
                    return Err(Error::InvalidSpec(format!("slow-change delta {delta}")));
                }
                Constraint::SlowChange {
                    delta: *delta,
                    norm: norm.unwrap_or(default_norm),
                }
            }
        })
    }

    pub fn build_adversary(&self) -> Result<Box<dyn Adversary>> {
        self.build_adversary_from(&self.adversary)
    }

    fn build_adversary_from(&self, spec: &AdversarySpec) -> Result<Box<dyn Adversary>> {
        Ok(match spec {
            AdversarySpec::Iid { dist } => Box::new(Iid {
                dist: dist.build()?,
            }),
            AdversarySpec::Constrained { proposal, dist, .. } => {
                let (domain, dimension) = self.linear_geometry()?;
                let proposal = match (proposal, dist) {
                    (ProposalKind::AntiLearner, None) => Proposal::AntiLearner,
                    (ProposalKind::Iid, Some(d)) => Proposal::Iid(d.build()?),
                    (ProposalKind::AntiLearner, Some(_)) => {
                        return Err(Error::InvalidSpec(
                            "dist is only used with proposal = \"iid\"".into(),
                        ))
                    }
                    (ProposalKind::Iid, None) => {
                        return Err(Error::InvalidSpec("proposal = \"iid\" needs dist".into()))
                    }
                };
                Box::new(ConstrainedAdversary::new(
                    self.build_constraint()?,
                    proposal,
                    domain,
                    dimension,
                )?)
            }
            AdversarySpec::Halving {} => Box::new(Halving::new()),
            AdversarySpec::Smoothed { gamma, inner } => {
                let inner = match inner.as_deref() {
                    None | Some(AdversarySpec::Halving {}) => Box::new(Halving::restarting()),
                    Some(i) => self.build_adversary_from(i)?,
                };
                Box::new(Smoothed::uniform(inner, *gamma)?)
            }
            AdversarySpec::RademacherLabels { x } => Box::new(Hybrid::rademacher(x.build()?)),
            AdversarySpec::Hybrid { x, labels } => Box::new(Hybrid::new(
                x.build()?,
                match labels {
                    LabelKind::Rademacher => LabelPolicy::Rademacher,
                    LabelKind::OppositeMajority => LabelPolicy::OppositeMajority,
                },
            )),
        })
    }

    /// The configured bound with its constants read off the class and the
    /// adversary; errors when the bound does not fit the game.
    pub fn resolve_bound(&self) -> Result<Option<Bound>> {
        let Some(spec) = &self.bound else {
            return Ok(None);
        };
        let class = self.class.build()?;
        let mismatch = |reason: &str| Error::BoundMismatch {
            bound: format!("{spec:?}"),
            reason: reason.into(),
        };
        let bound = match spec {
            BoundSpec::Variance { lambda } | BoundSpec::SlowChange { lambda } => {
                let (radius_sq, dimension) = match class {
                    FunctionClass::LinearBall {
                        radius,
                        norm: BallNorm::Euclidean,
                        ..
                    } => (radius * radius, None),
                    FunctionClass::Simplex { dimension } => {
                        ((dimension as f64).ln(), Some(dimension))
                    }
                    _ => return Err(mismatch("needs a Euclidean ball or simplex class")),
                };
                match (spec, self.build_constraint()?) {
                    (BoundSpec::Variance { .. }, Constraint::Variance { sigma, .. }) => {
                        Bound::Variance {
                            radius_sq,
                            lambda: *lambda,
                            sigma,
                            dimension,
                        }
                    }
                    (BoundSpec::SlowChange { .. }, Constraint::SlowChange { delta, .. }) => {
                        Bound::SlowChange {
                            radius_sq,
                            lambda: *lambda,
                            delta,
                            dimension,
                        }
                    }
                    _ => return Err(mismatch("the adversary is not constrained accordingly")),
                }
            }
            BoundSpec::SmoothedThreshold { gamma } => {
                let gamma = gamma
                    .or(self.adversary.noise_width())
                    .ok_or_else(|| mismatch("needs gamma or a smoothed adversary"))?;
                Bound::SmoothedThreshold { gamma }
            }
        };
        bound.check_game(self)?;
        Ok(Some(bound))
    }
}
