//! Measured regret against bounds and complexity estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{Bound, BoundTrace};
use super::run::{play_game, GameParts};
use super::spec::{ExperimentSpec, RegretMode};
use crate::adversaries::{Adversary, Hybrid, Iid, Smoothed};
use crate::complexity::{classical_rademacher, EstimateCI};
use crate::dist::PointDist;
use crate::domain::{FunctionClass, Point, RegretRecord};
use crate::error::{Error, Result};
use crate::learners::{discretization_exponent, Ftl, Learner};
use crate::rng::{derive_seed, rng_from_seed};
use crate::stats::{mean_and_se, pairwise_sum};

/// Distribution of `bound - final regret` over replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackStats {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub bound: BoundTrace,
    pub replicates: usize,
    pub mean_final_regret: f64,
    pub se_final_regret: f64,
    pub max_final_regret: f64,
    pub slack: SlackStats,
}

/// Passes iff every replicate's final regret is at most the bound.
pub fn verify_bound(
    records: &[RegretRecord],
    bound: &Bound,
    game: &ExperimentSpec,
) -> Result<Verdict> {
    if records.is_empty() {
        return Err(Error::EmptySequence);
    }
    if let Some(r) = records.iter().find(|r| r.horizon() != game.horizon) {
        return Err(Error::BoundMismatch {
            bound: bound.id().into(),
            reason: format!(
                "record of horizon {} for a game of horizon {}",
                r.horizon(),
                game.horizon
            ),
        });
    }
    bound.check_game(game)?;
    let trace = bound.trace(game.horizon)?;
    let finals: Vec<f64> = records.iter().map(RegretRecord::final_regret).collect();
    let (mean, se) = mean_and_se(&finals);
    let max = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut slack: Vec<f64> = finals.iter().map(|r| trace.value - r).collect();
    slack.sort_by(f64::total_cmp);
    let n = slack.len();
    let median = if n % 2 == 1 {
        slack[n / 2]
    } else {
        0.5 * (slack[n / 2 - 1] + slack[n / 2])
    };
    Ok(Verdict {
        pass: max <= trace.value,
        replicates: n,
        mean_final_regret: mean,
        se_final_regret: se,
        max_final_regret: max,
        slack: SlackStats {
            min: slack[0],
            median,
            mean: pairwise_sum(&slack) / n as f64,
            max: slack[n - 1],
        },
        bound: trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundVerdict {
    pub pass: bool,
    pub mean_regret: f64,
    pub regret_se: f64,
    pub rademacher: EstimateCI,
    pub combined_se: f64,
}

/// Plays the supervised absolute-loss game with fair labels on instances
/// from `x_dist` and checks `mean regret >= Rad_T(F, p_X) - 3 SE`, with
/// `Rad_T` the classical complexity of `class` on unlabeled draws
/// (estimated from `replicates` samples).
pub fn lower_bound_check<F>(
    class: &FunctionClass,
    x_dist: &PointDist,
    make_learner: F,
    horizon: usize,
    replicates: usize,
    seed: u64,
) -> Result<LowerBoundVerdict>
where
    F: Fn() -> Result<Box<dyn Learner>> + Sync,
{
    if replicates < 2 {
        return Err(Error::TooFewSamples(replicates));
    }
    let finals = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let parts = GameParts {
                learner: make_learner()?,
                adversary: Box::new(Hybrid::rademacher(x_dist.clone())),
                comparator: class.clone(),
                horizon,
                analytic: false,
                regret: RegretMode::Fixed,
            };
            play_game(parts, derive_seed(seed, r as u64)).map(|g| g.record.final_regret())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, se) = mean_and_se(&finals);
    let rad = classical_rademacher(
        class,
        x_dist,
        horizon,
        replicates,
        derive_seed(seed, u64::MAX),
    )?;
    let combined = (se * se + rad.std_error * rad.std_error).sqrt();
    Ok(LowerBoundVerdict {
        pass: mean >= rad.mean - 3.0 * combined,
        mean_regret: mean,
        regret_se: se,
        rademacher: rad,
        combined_se: combined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub pass: bool,
    pub horizon: usize,
    pub gamma: f64,
    pub exponent: f64,
    pub bins: f64,
    pub runs: usize,
    pub runs_with_collision: usize,
    pub frequency: f64,
    pub std_error: f64,
    pub bound: f64,
}

/// Bins-and-balls check: `T` smoothed moves aimed at one point land in
/// `N = T^a` equal bins of `[0, 1)`; the fraction of runs in which two
/// moves share a bin must stay below `1 / (gamma T^(a-2)) + 3 SE`.
pub fn collision_check(
    horizon: usize,
    gamma: f64,
    runs: usize,
    seed: u64,
) -> Result<CollisionReport> {
    if horizon < 2 || !(gamma > 0.0 && gamma <= 1.0) || runs < 2 {
        return Err(Error::InvalidParameter(
            "collision check needs T >= 2, gamma in (0, 1], runs >= 2".to_string(),
        ));
    }
    let a = discretization_exponent(horizon, gamma);
    let bins = (horizon as f64).powf(a);
    let hits = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r as u64));
            let mut adv = Smoothed::uniform(
                Box::new(Iid {
                    dist: PointDist::PointMass(Point::pair(0.5, 1.0)),
                }),
                gamma,
            )?;
            let idle = Ftl::new(FunctionClass::threshold_interval(0.0)?);
            let mut cells = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let z = adv
                    .next_move(&idle, &mut rng)?
                    .realized
                    .threshold_z()
                    .expect("threshold move")
                    .to_f64();
                cells.push((z * bins).floor() as i128);
            }
            cells.sort_unstable();
            Ok(cells.windows(2).any(|w| w[0] == w[1]))
        })
        .collect::<Result<Vec<bool>>>()?;
    let k = hits.iter().filter(|h| **h).count();
    let f = k as f64 / runs as f64;
    let se = (f * (1.0 - f) / runs as f64).sqrt();
    let bound = 1.0 / (gamma * (horizon as f64).powf(a - 2.0));
    Ok(CollisionReport {
        pass: f <= bound + 3.0 * se,
        horizon,
        gamma,
        exponent: a,
        bins,
        runs,
        runs_with_collision: k,
        frequency: f,
        std_error: se,
        bound,
    })
}
