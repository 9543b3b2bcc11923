//! The round-by-round protocol.

use rayon::prelude::*;

use super::spec::{ExperimentSpec, RegretMode};
use crate::adversaries::{Adversary, Move};
use crate::domain::{best_fixed_comparator, FunctionClass, Point, RegretRecord};
use crate::error::{Error, Result};
use crate::learners::Learner;
use crate::rng::{derive_seed, rng_from_seed};

/// Everything one replicate needs.
pub struct GameParts {
    pub learner: Box<dyn Learner>,
    pub adversary: Box<dyn Adversary>,
    pub comparator: FunctionClass,
    pub horizon: usize,
    pub analytic: bool,
    pub regret: RegretMode,
}

/// One played game: the regret record and every move.
#[derive(Debug, Clone)]
pub struct GameTrace {
    pub record: RegretRecord,
    pub moves: Vec<Move>,
}

/// Plays one game. Each round draws, in order, the learner's hypothesis
/// (skipped in analytic mode), the adversary's move and the adversary's
/// noise; the learner then pays on the realized move and observes it.
pub fn play_game(parts: GameParts, seed: u64) -> Result<GameTrace> {
    let GameParts {
        mut learner,
        mut adversary,
        comparator,
        horizon,
        analytic,
        regret,
    } = parts;
    let mut rng = rng_from_seed(seed);
    let mut intended: Vec<Point> = Vec::with_capacity(horizon);
    let mut realized: Vec<Point> = Vec::with_capacity(horizon);
    let mut moves = Vec::with_capacity(horizon);
    let mut losses = Vec::with_capacity(horizon);
    for round in 1..=horizon {
        let h = if analytic {
            None
        } else {
            Some(learner.draw(&mut rng))
        };
        let mv = adversary.next_move(learner.as_ref(), &mut rng)?;
        if !adversary.constraint().holds(&intended, &mv.intended)? {
            return Err(Error::ConstraintViolation { round });
        }
        let loss = match &h {
            Some(h) => learner.loss(h, &mv.realized)?,
            None => learner.expected_loss(&mv.realized)?,
        };
        learner.update(&mv.realized)?;
        losses.push(loss);
        intended.push(mv.intended.clone());
        realized.push(mv.realized.clone());
        moves.push(mv);
    }
    let record = match regret {
        RegretMode::Fixed => {
            let (best, _) = best_fixed_comparator(&comparator, &realized)?;
            let per_round = realized
                .iter()
                .map(|x| comparator.evaluate(&best, x))
                .collect::<Result<Vec<_>>>()?;
            RegretRecord::against_fixed(losses, &per_round, seed)
        }
        RegretMode::Prefix => {
            let prefix = (1..=horizon)
                .map(|t| best_fixed_comparator(&comparator, &realized[..t]).map(|r| r.1))
                .collect::<Result<Vec<_>>>()?;
            RegretRecord::against_prefix(losses, &prefix, seed)
        }
    };
    Ok(GameTrace { record, moves })
}

/// Seed of replicate `r`.
pub fn replicate_seed(spec: &ExperimentSpec, replicate: usize) -> u64 {
    derive_seed(spec.master_seed(), replicate as u64)
}

/// Plays replicate `r` of an experiment.
pub fn play_replicate(spec: &ExperimentSpec, replicate: usize) -> Result<GameTrace> {
    let parts = GameParts {
        learner: spec.build_learner()?,
        adversary: spec.build_adversary()?,
        comparator: spec.class.build()?,
        horizon: spec.horizon,
        analytic: spec.analytic,
        regret: spec.regret,
    };
    play_game(parts, replicate_seed(spec, replicate))
}

/// All replicates, in replicate order; the result does not depend on the
/// number of worker threads.
pub fn run_game(spec: &ExperimentSpec) -> Result<Vec<RegretRecord>> {
    spec.validate()?;
    (0..spec.replicates)
        .into_par_iter()
        .map(|r| play_replicate(spec, r).map(|g| g.record))
        .collect()
}
