use serde::{Deserialize, Serialize};

use super::class::FunctionClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `<f, x>` (or the raw table value).
    Linear,
    /// `|f(x) - y|` on labeled moves.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Plain,
    Supervised,
    Smoothed,
}

/// Horizon, class, loss and protocol of one game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub horizon: usize,
    pub class: FunctionClass,
    pub loss: LossKind,
    pub protocol: Protocol,
}

impl GameSpec {
    pub fn new(
        horizon: usize,
        class: FunctionClass,
        loss: LossKind,
        protocol: Protocol,
    ) -> Result<Self> {
        let spec = Self {
            horizon,
            class,
            loss,
            protocol,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidSpec("horizon must be at least 1".into()));
        }
        if self.loss == LossKind::Absolute && self.protocol == Protocol::Plain {
            return Err(Error::InvalidSpec(
                "absolute loss needs the supervised or smoothed protocol".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRecord {
    pub per_round_loss: Vec<f64>,
    pub comparator_loss: f64,
    pub cumulative_regret: Vec<f64>,
    pub seed: u64,
}

impl RegretRecord {
    /// Regret against one fixed comparator at every prefix:
    /// `cumulative_regret[t] = sum_{s<=t} loss_s - sum_{s<=t} comparator_s`.
    pub fn against_fixed(
        per_round_loss: Vec<f64>,
        comparator_per_round: &[f64],
        seed: u64,
    ) -> Self {
        assert_eq!(per_round_loss.len(), comparator_per_round.len());
        let mut cumulative_regret = Vec::with_capacity(per_round_loss.len());
        let (mut lsum, mut csum) = (0.0, 0.0);
        for (l, c) in per_round_loss.iter().zip(comparator_per_round) {
            lsum += l;
            csum += c;
            cumulative_regret.push(lsum - csum);
        }
        Self {
            per_round_loss,
            comparator_loss: csum,
            cumulative_regret,
            seed,
        }
    }

    /// Regret against the best comparator of each prefix; `prefix_best[t]` is
    /// the optimal cumulative loss over rounds `0..=t`.
    pub fn against_prefix(per_round_loss: Vec<f64>, prefix_best: &[f64], seed: u64) -> Self {
        assert_eq!(per_round_loss.len(), prefix_best.len());
        let mut cumulative_regret = Vec::with_capacity(per_round_loss.len());
        let mut lsum = 0.0;
        for (l, c) in per_round_loss.iter().zip(prefix_best) {
            lsum += l;
            cumulative_regret.push(lsum - c);
        }
        let comparator_loss = *prefix_best.last().unwrap_or(&0.0);
        Self {
            per_round_loss,
            comparator_loss,
            cumulative_regret,
            seed,
        }
    }

    pub fn horizon(&self) -> usize {
        self.per_round_loss.len()
    }

    pub fn final_regret(&self) -> f64 {
        *self.cumulative_regret.last().unwrap_or(&0.0)
    }

    pub fn total_loss(&self) -> f64 {
        self.per_round_loss.iter().sum()
    }
}
