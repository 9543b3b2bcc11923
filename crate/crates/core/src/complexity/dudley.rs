//! Entropy-integral bound `inf_a {4 T a + 12 int_a^1 sqrt(T log N_2(d)) dd}`.

use rayon::prelude::*;

use super::cover::{CoverInstance, PNorm};
use super::rademacher::EstimateCI;
use crate::domain::{FunctionClass, Point};
use crate::error::{Error, Result};
use crate::rng::derived_rng;
use crate::trees::{sample_tree_pair, BinaryTree, ObliviousStrategy};

/// Golden-section tolerance on the scale `alpha`.
pub const GOLDEN_TOL: f64 = 1e-6;

/// `N_2(delta)` as a right-continuous step function on `[0, 1]`: equal to
/// `counts[k]` on `[breakpoints[k], breakpoints[k + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverProfile {
    pub breakpoints: Vec<f64>,
    pub counts: Vec<usize>,
    /// Some scale fell back to a greedy cover.
    pub upper_bound_only: bool,
}

impl CoverProfile {
    /// Builds the step function of a class on one tree. The covering number
    /// only changes where the scale crosses a candidate-to-profile distance;
    /// the distinct steps are located by bisection over those distances.
    pub fn new(inst: &CoverInstance) -> Self {
        let dist = inst.distances(PNorm::L2);
        let mut scales: Vec<f64> = dist
            .iter()
            .flatten()
            .copied()
            .filter(|d| *d > 0.0 && *d < 1.0)
            .collect();
        scales.push(0.0);
        scales.sort_by(f64::total_cmp);
        scales.dedup();
        let mut flagged = false;
        let mut eval = |k: usize| {
            let r = inst.cover_with(&dist, scales[k], PNorm::L2);
            flagged |= r.upper_bound_only;
            r.size
        };
        let last = scales.len() - 1;
        let mut known = vec![None; scales.len()];
        known[0] = Some(eval(0));
        known[last] = Some(eval(last));
        let mut stack = vec![(0, last)];
        while let Some((i, j)) = stack.pop() {
            if j <= i + 1 || known[i] == known[j] {
                continue;
            }
            let mid = (i + j) / 2;
            known[mid] = Some(eval(mid));
            stack.push((i, mid));
            stack.push((mid, j));
        }
        // fill gaps from the left: values between equal endpoints are equal
        let mut breakpoints = Vec::new();
        let mut counts = Vec::new();
        let mut current = None;
        for (k, v) in known.iter().enumerate() {
            if let Some(v) = v {
                if current != Some(*v) {
                    breakpoints.push(scales[k]);
                    counts.push(*v);
                    current = Some(*v);
                }
            }
        }
        Self {
            breakpoints,
            counts,
            upper_bound_only: flagged,
        }
    }

    pub fn count_at(&self, delta: f64) -> usize {
        let k = self.breakpoints.partition_point(|b| *b <= delta);
        self.counts[k.max(1) - 1]
    }

    /// `int_alpha^1 sqrt(T ln N(delta)) d delta`, exactly.
    pub fn entropy_integral(&self, horizon: usize, alpha: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..self.breakpoints.len() {
            let lo = self.breakpoints[k].max(alpha);
            let hi = self.breakpoints.get(k + 1).copied().unwrap_or(1.0).min(1.0);
            if hi > lo {
                total += (hi - lo) * (horizon as f64 * (self.counts[k] as f64).ln()).sqrt();
            }
        }
        total
    }

    pub fn objective(&self, horizon: usize, alpha: f64) -> f64 {
        4.0 * horizon as f64 * alpha + 12.0 * self.entropy_integral(horizon, alpha)
    }

    /// Minimizes the objective over `alpha in [0, 1]`. The covering number is
    /// non-increasing, so the objective is convex and golden-section search
    /// applies.
    pub fn minimize(&self, horizon: usize) -> (f64, f64) {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let f = |a: f64| self.objective(horizon, a);
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > GOLDEN_TOL {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
        }
        let mid = 0.5 * (a + b);
        [(mid, f(mid)), (0.0, f(0.0)), (1.0, f(1.0))]
            .into_iter()
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("three candidates")
    }
}

/// Bound for one fixed tree: `(minimizing alpha, value)`.
pub fn dudley_on_tree(class: &FunctionClass, tree: &BinaryTree<Point>) -> Result<(f64, f64)> {
    let inst = CoverInstance::from_class(class, tree)?;
    Ok(CoverProfile::new(&inst).minimize(tree.depth()))
}

/// Average of the per-tree bound over `n_trees` tree pairs from the strategy.
pub fn dudley_bound(
    class: &FunctionClass,
    strategy: &ObliviousStrategy,
    horizon: usize,
    n_trees: usize,
    seed: u64,
) -> Result<EstimateCI> {
    if n_trees < 2 {
        return Err(Error::TooFewSamples(n_trees));
    }
    let values = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(seed, i as u64);
            let (x, _) = sample_tree_pair(strategy, horizon, &mut rng)?;
            dudley_on_tree(class, &x).map(|r| r.1)
        })
        .collect::<Result<Vec<f64>>>()?;
    EstimateCI::from_samples(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::PointDist;

    #[test]
    fn singleton_bound_is_zero() {
        let c = FunctionClass::finite_table(vec![vec![0.2, -0.4]]).unwrap();
        let s = ObliviousStrategy::Iid(PointDist::UniformIndex(2));
        let e = dudley_bound(&c, &s, 5, 10, 0).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn zero_one_constants_closed_form() {
        let c = FunctionClass::finite_table(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let s = ObliviousStrategy::Iid(PointDist::UniformIndex(2));
        let t = 6;
        let (x, _) = sample_tree_pair(&s, t, &mut crate::rng::rng_from_seed(2)).unwrap();
        let (alpha, value) = dudley_on_tree(&c, &x).unwrap();
        // inf_a {4 T a + 12 sqrt(T ln 2) max(0, 1/2 - a)}, by a dense scan
        let g =
            |a: f64| 4.0 * t as f64 * a + 12.0 * (t as f64 * 2f64.ln()).sqrt() * (0.5 - a).max(0.0);
        let scan = (0..=100_000)
            .map(|k| g(k as f64 / 100_000.0))
            .fold(f64::INFINITY, f64::min);
        assert!((value - scan).abs() < 1e-4, "{value} vs {scan}");
        assert!((value - 12.0).abs() < 1e-4);
        assert!((alpha - 0.5).abs() < 1e-5);
    }
}
