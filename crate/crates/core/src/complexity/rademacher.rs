use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sup::{center_of, check_supported, random_signs, signs_from_bits, weighted_sup, Center};
use crate::dist::PointDist;
use crate::domain::{FiniteTable, FunctionClass, Point, ThresholdGrid};
use crate::error::{Error, Result};
use crate::rng::{derived_rng, SimRng};
use crate::stats::mean_and_se;
use crate::trees::{
    chi, sample_along, sample_path, sample_tree_pair, BinaryTree, ObliviousStrategy, Path,
};

/// Horizons up to this depth average over all `2^T` sign vectors exactly.
pub const EXACT_SIGN_DEPTH: usize = 12;

/// Work budget of the exact worst-case recursion.
pub const WORSTCASE_BUDGET: f64 = 1e8;

/// Inner Monte Carlo size for conditional means without a closed form.
pub const DEFAULT_INNER_MC: usize = 256;

/// Monte Carlo estimate with its standard error; the reported interval is
/// `mean +- 3 std_error`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateCI {
    pub mean: f64,
    pub std_error: f64,
    #[serde(rename = "n")]
    pub n_samples: usize,
}

impl EstimateCI {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples(samples.len()));
        }
        let (mean, std_error) = mean_and_se(samples);
        Ok(Self {
            mean,
            std_error,
            n_samples: samples.len(),
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (
            self.mean - 3.0 * self.std_error,
            self.mean + 3.0 * self.std_error,
        )
    }

    /// `sqrt(se_a^2 + se_b^2)`.
    pub fn combined_se(&self, other: &EstimateCI) -> f64 {
        self.std_error.hypot(other.std_error)
    }
}

/// Which path the supremum is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    /// `x_t(eps)` along the random path `eps`.
    #[default]
    Full,
    /// `x_t(-1, .., -1)` with independent signs.
    Leftmost,
}

/// How tree pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeSampling {
    /// Only the values along one path (any depth).
    #[default]
    Lazy,
    /// Whole trees (depth at most 24); depths up to [`EXACT_SIGN_DEPTH`]
    /// average over every path.
    Materialized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistDepOptions {
    pub centered: bool,
    pub path_mode: PathMode,
    pub sampling: TreeSampling,
    /// Draws per conditional mean for laws without a finite support;
    /// `None` makes such laws an error in centered mode.
    pub inner_mc: Option<usize>,
}

impl Default for DistDepOptions {
    fn default() -> Self {
        Self {
            centered: false,
            path_mode: PathMode::Full,
            sampling: TreeSampling::Lazy,
            inner_mc: Some(DEFAULT_INNER_MC),
        }
    }
}

/// `E_{x ~ p^T} E_eps sup_f sum_t eps_t f(x_t)` by Monte Carlo over `n`
/// sequences; sample `i` uses the generator derived from `(seed, i)`.
pub fn classical_rademacher(
    class: &FunctionClass,
    dist: &PointDist,
    horizon: usize,
    n: usize,
    seed: u64,
) -> Result<EstimateCI> {
    check_supported(class)?;
    check_horizon(horizon)?;
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(seed, i as u64);
            let xs: Vec<Point> = (0..horizon).map(|_| dist.sample(&mut rng)).collect();
            let refs: Vec<&Point> = xs.iter().collect();
            average_over_signs(class, &refs, None, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    EstimateCI::from_samples(&samples)
}

/// `E_eps sup_f sum_t eps_t f(x_t)` on one fixed sequence, exact for
/// `T <= 20`.
pub fn rademacher_on_sequence(class: &FunctionClass, xs: &[Point]) -> Result<f64> {
    check_supported(class)?;
    if xs.is_empty() || xs.len() > 20 {
        return Err(Error::InvalidParameter(format!(
            "exact sign average needs 1..=20 points, got {}",
            xs.len()
        )));
    }
    let refs: Vec<&Point> = xs.iter().collect();
    exact_sign_average(class, &refs, None)
}

fn exact_sign_average(
    class: &FunctionClass,
    xs: &[&Point],
    centers: Option<&[Center]>,
) -> Result<f64> {
    let t = xs.len();
    let mut vals = Vec::with_capacity(1 << t);
    for bits in 0..(1u64 << t) {
        vals.push(weighted_sup(class, xs, &signs_from_bits(bits, t), centers)?);
    }
    Ok(crate::stats::mean(&vals))
}

/// Exact sign average for short sequences, one random sign vector otherwise.
fn average_over_signs(
    class: &FunctionClass,
    xs: &[&Point],
    centers: Option<&[Center]>,
    rng: &mut SimRng,
) -> Result<f64> {
    if xs.len() <= EXACT_SIGN_DEPTH {
        exact_sign_average(class, xs, centers)
    } else {
        weighted_sup(class, xs, &random_signs(xs.len(), rng), centers)
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    Ok(())
}

/// `sup_x E_eps sup_f sum_t eps_t f(x_t(eps))` over trees with values in the
/// table's finite domain, exactly, by
/// `V(t, S) = max_x (V(t+1, S + f(x)) + V(t+1, S - f(x))) / 2`,
/// `V(T+1, S) = max_f S_f`.
///
/// Threshold grids reduce to one point per cell between thresholds; the
/// interval class agrees with a `2^T`-point grid, since a depth-`T` tree has
/// fewer distinct nodes than that.
pub fn worstcase_sequential_rademacher(class: &FunctionClass, horizon: usize) -> Result<f64> {
    check_horizon(horizon)?;
    let reduced;
    let table = match class {
        FunctionClass::FiniteTable(t) => t,
        FunctionClass::ThresholdGrid(g) => {
            reduced = grid_cells(g)?;
            &reduced
        }
        FunctionClass::ThresholdInterval { margin } if horizon < 12 => {
            reduced = grid_cells(&ThresholdGrid::new(1 << horizon, *margin)?)?;
            &reduced
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "worst-case recursion needs a finite table or a threshold class, got {}",
                other.variant_name()
            )))
        }
    };
    let work = (table.domain_size() as f64).powi(horizon as i32)
        * table.len() as f64
        * 2f64.powi(horizon as i32);
    if work > WORSTCASE_BUDGET {
        return Err(Error::BudgetExceeded {
            work,
            budget: WORSTCASE_BUDGET,
        });
    }
    // columns as per-function vectors
    let cols: Vec<Vec<f64>> = (0..table.domain_size())
        .map(|j| table.rows().iter().map(|r| r[j]).collect())
        .collect();
    let mut s = vec![0.0; table.len()];
    Ok(worstcase_rec(&cols, horizon, &mut s))
}

/// The grid's predictors on one representative point of each cell.
fn grid_cells(grid: &ThresholdGrid) -> Result<FiniteTable> {
    let n = grid.resolution();
    if n > 1 << 12 {
        return Err(Error::BudgetExceeded {
            work: n as f64,
            budget: (1u64 << 12) as f64,
        });
    }
    let mut zs = vec![grid.threshold(0) / 2.0];
    zs.extend((0..n - 1).map(|i| (grid.threshold(i) + grid.threshold(i + 1)) / 2.0));
    zs.push(1.0);
    match FunctionClass::threshold_table(grid, &zs)? {
        FunctionClass::FiniteTable(t) => Ok(t),
        _ => unreachable!("threshold_table builds a table"),
    }
}

fn worstcase_rec(cols: &[Vec<f64>], remaining: usize, s: &mut [f64]) -> f64 {
    if remaining == 0 {
        return s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let mut best = f64::NEG_INFINITY;
    for col in cols {
        let mut v = 0.0;
        for sign in [1.0, -1.0] {
            for (si, ci) in s.iter_mut().zip(col) {
                *si += sign * ci;
            }
            v += 0.5 * worstcase_rec(cols, remaining - 1, s);
            for (si, ci) in s.iter_mut().zip(col) {
                *si -= sign * ci;
            }
        }
        best = best.max(v);
    }
    best
}

/// `E_{(x, x') ~ rho} E_eps sup_f sum_t eps_t f(x_t(eps))`, optionally
/// centered by `E_{t-1} f(x_t(eps))`, by Monte Carlo over `n` samples.
pub fn distdep_rademacher(
    class: &FunctionClass,
    strategy: &ObliviousStrategy,
    horizon: usize,
    n: usize,
    options: DistDepOptions,
    seed: u64,
) -> Result<EstimateCI> {
    let samples = paired_samples(&[class], strategy, horizon, n, options, seed)?;
    let col: Vec<f64> = samples.into_iter().map(|v| v[0]).collect();
    EstimateCI::from_samples(&col)
}

/// Per-sample estimator values for several classes evaluated on the same
/// trees and signs; `out[i][k]` is sample `i` for `classes[k]`.
pub fn paired_samples(
    classes: &[&FunctionClass],
    strategy: &ObliviousStrategy,
    horizon: usize,
    n: usize,
    options: DistDepOptions,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    for c in classes {
        check_supported(c)?;
    }
    check_horizon(horizon)?;
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(seed, i as u64);
            one_sample(classes, strategy, horizon, options, &mut rng)
        })
        .collect()
}

fn one_sample(
    classes: &[&FunctionClass],
    strategy: &ObliviousStrategy,
    horizon: usize,
    options: DistDepOptions,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    match options.sampling {
        TreeSampling::Lazy => {
            let ps = match options.path_mode {
                PathMode::Full => sample_path(strategy, horizon, rng)?,
                PathMode::Leftmost => sample_along(strategy, Path::leftmost(horizon), rng)?,
            };
            let refs: Vec<&Point> = ps.x.iter().collect();
            let signs: Option<Vec<f64>> = match options.path_mode {
                PathMode::Full => Some(ps.path.signs().iter().map(|s| f64::from(*s)).collect()),
                PathMode::Leftmost => None,
            };
            classes
                .iter()
                .map(|class| {
                    let centers = if options.centered {
                        Some(
                            ps.kernels
                                .iter()
                                .map(|d| center_of(class, d, options.inner_mc, rng))
                                .collect::<Result<Vec<_>>>()?,
                        )
                    } else {
                        None
                    };
                    match &signs {
                        Some(w) => weighted_sup(class, &refs, w, centers.as_deref()),
                        None => average_over_signs(class, &refs, centers.as_deref(), rng),
                    }
                })
                .collect()
        }
        TreeSampling::Materialized => {
            let (x, xp) = sample_tree_pair(strategy, horizon, rng)?;
            let kernels = if options.centered {
                Some(kernel_tree(strategy, &x, &xp)?)
            } else {
                None
            };
            classes
                .iter()
                .map(|class| {
                    let centers = match &kernels {
                        Some(k) => Some(
                            k.nodes()
                                .iter()
                                .map(|d| center_of(class, d, options.inner_mc, rng))
                                .collect::<Result<Vec<_>>>()?,
                        ),
                        None => None,
                    };
                    let along = |bits: u64| -> (Vec<&Point>, Option<Vec<Center>>) {
                        let xs: Vec<&Point> = x.path_values_bits(bits).collect();
                        let cs = centers.as_ref().map(|c| {
                            (1..=horizon)
                                .map(|t| {
                                    c[crate::trees::node_index(t, bits >> (horizon - t + 1))]
                                        .clone()
                                })
                                .collect()
                        });
                        (xs, cs)
                    };
                    match options.path_mode {
                        PathMode::Full if horizon <= EXACT_SIGN_DEPTH => {
                            let mut vals = Vec::with_capacity(1 << horizon);
                            for bits in 0..(1u64 << horizon) {
                                let (xs, cs) = along(bits);
                                vals.push(weighted_sup(
                                    class,
                                    &xs,
                                    &signs_from_bits(bits, horizon),
                                    cs.as_deref(),
                                )?);
                            }
                            Ok(crate::stats::mean(&vals))
                        }
                        PathMode::Full => {
                            let w = random_signs(horizon, rng);
                            let bits = w
                                .iter()
                                .fold(0u64, |acc, s| (acc << 1) | u64::from(*s > 0.0));
                            let (xs, cs) = along(bits);
                            weighted_sup(class, &xs, &w, cs.as_deref())
                        }
                        PathMode::Leftmost => {
                            let (xs, cs) = along(0);
                            average_over_signs(class, &xs, cs.as_deref(), rng)
                        }
                    }
                })
                .collect()
        }
    }
}

/// Conditional law at every node, given the interleaved history along its prefix.
fn kernel_tree(
    strategy: &ObliviousStrategy,
    x: &BinaryTree<Point>,
    xp: &BinaryTree<Point>,
) -> Result<BinaryTree<PointDist>> {
    let depth = x.depth();
    let mut out: Vec<Option<PointDist>> = vec![None; x.nodes().len()];
    let mut history = Vec::with_capacity(depth);
    fn rec(
        strategy: &ObliviousStrategy,
        x: &BinaryTree<Point>,
        xp: &BinaryTree<Point>,
        level: usize,
        prefix: u64,
        history: &mut Vec<Point>,
        out: &mut [Option<PointDist>],
    ) -> Result<()> {
        out[crate::trees::node_index(level, prefix)] = Some(strategy.kernel(history)?);
        if level == x.depth() {
            return Ok(());
        }
        for sign in [-1i8, 1] {
            history.push(chi(x.node(level, prefix), xp.node(level, prefix), sign).clone());
            rec(
                strategy,
                x,
                xp,
                level + 1,
                (prefix << 1) | u64::from(sign == 1),
                history,
                out,
            )?;
            history.pop();
        }
        Ok(())
    }
    rec(strategy, x, xp, 1, 0, &mut history, &mut out)?;
    BinaryTree::from_nodes(
        depth,
        out.into_iter().map(|d| d.expect("visited")).collect(),
    )
}
