use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::tree::{BinaryTree, Path};
use crate::dist::PointDist;
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// User-supplied conditional law `p_t(. | x_{1:t-1})`.
///
/// Kernels returning finite laws ([`PointDist::support`]) get exact
/// conditional means in the centered estimator.
pub trait Kernel: Send + Sync {
    fn distribution(&self, history: &[Point], t: usize) -> Result<PointDist>;
}

/// Transition of a [`ObliviousStrategy::Markov`] chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarkovStep {
    /// Index walk on the cycle `0..n`: uniform on `{i - 1, i + 1}` mod `n`.
    IndexWalk { n: usize },
    /// Vector walk: every coordinate moves by `+step` or `-step` together,
    /// each with probability one half.
    PlusMinus { step: f64 },
}

/// Oblivious adversary strategy given by its conditional kernels.
#[derive(Clone)]
pub enum ObliviousStrategy {
    Iid(PointDist),
    Deterministic(Vec<Point>),
    Markov {
        initial: PointDist,
        step: MarkovStep,
    },
    Custom(Arc<dyn Kernel>),
}

impl fmt::Debug for ObliviousStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObliviousStrategy::Iid(p) => write!(f, "Iid({p:?})"),
            ObliviousStrategy::Deterministic(s) => write!(f, "Deterministic(len {})", s.len()),
            ObliviousStrategy::Markov { initial, step } => {
                write!(f, "Markov({initial:?}, {step:?})")
            }
            ObliviousStrategy::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ObliviousStrategy {
    pub fn custom(kernel: impl Kernel + 'static) -> Self {
        ObliviousStrategy::Custom(Arc::new(kernel))
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            ObliviousStrategy::Iid(_) => "iid",
            ObliviousStrategy::Deterministic(_) => "deterministic",
            ObliviousStrategy::Markov { .. } => "markov",
            ObliviousStrategy::Custom(_) => "custom",
        }
    }

    /// `p_t(. | history)` for round `t = history.len() + 1`.
    pub fn kernel(&self, history: &[Point]) -> Result<PointDist> {
        let t = history.len() + 1;
        match self {
            ObliviousStrategy::Iid(p) => Ok(p.clone()),
            ObliviousStrategy::Deterministic(seq) => seq
                .get(t - 1)
                .cloned()
                .map(PointDist::PointMass)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("deterministic sequence has no round {t}"))
                }),
            ObliviousStrategy::Markov { initial, step } => match history.last() {
                None => Ok(initial.clone()),
                Some(prev) => markov_step(*step, prev),
            },
            ObliviousStrategy::Custom(k) => k.distribution(history, t),
        }
    }
}

fn markov_step(step: MarkovStep, prev: &Point) -> Result<PointDist> {
    match (step, prev) {
        (MarkovStep::IndexWalk { n }, Point::Index(i)) if n > 0 && *i < n => {
            let down = (i + n - 1) % n;
            let up = (i + 1) % n;
            Ok(PointDist::Discrete(vec![
                (Point::Index(down), 0.5),
                (Point::Index(up), 0.5),
            ]))
        }
        (MarkovStep::PlusMinus { step }, Point::Vector(v)) => {
            let shift = |s: f64| Point::Vector(v.iter().map(|x| x + s * step).collect());
            Ok(PointDist::Discrete(vec![
                (shift(-1.0), 0.5),
                (shift(1.0), 0.5),
            ]))
        }
        _ => Err(Error::InvalidParameter(format!(
            "markov step {step:?} cannot follow {prev}"
        ))),
    }
}

fn prefix_string(signs: &[i8]) -> String {
    if signs.is_empty() {
        return "root".into();
    }
    signs
        .iter()
        .map(|s| if *s == 1 { '+' } else { '-' })
        .collect()
}

fn kernel_at(strategy: &ObliviousStrategy, history: &[Point], signs: &[i8]) -> Result<PointDist> {
    strategy.kernel(history).map_err(|e| Error::Sampling {
        prefix: prefix_string(signs),
        reason: e.to_string(),
    })
}

/// Samples `(x, x')` from the tree process: at level `t` on prefix `eps`,
/// both nodes are i.i.d. from `p_t(. | chi_1(eps_1), .., chi_{t-1}(eps_{t-1}))`.
///
/// Nodes are visited depth first, left (-1) subtree before right, drawing
/// `x` then `x'` at each node.
pub fn sample_tree_pair(
    strategy: &ObliviousStrategy,
    depth: usize,
    rng: &mut SimRng,
) -> Result<(BinaryTree<Point>, BinaryTree<Point>)> {
    // validate depth before allocating
    BinaryTree::constant(depth, ())?;
    let size = (1usize << depth) - 1;
    let mut x: Vec<Option<Point>> = vec![None; size];
    let mut xp: Vec<Option<Point>> = vec![None; size];
    let mut history = Vec::with_capacity(depth);
    let mut signs = Vec::with_capacity(depth);
    fill(
        strategy,
        depth,
        1,
        0,
        &mut history,
        &mut signs,
        &mut x,
        &mut xp,
        rng,
    )?;
    let unwrap = |v: Vec<Option<Point>>| {
        v.into_iter()
            .map(|p| p.expect("every node visited"))
            .collect()
    };
    Ok((
        BinaryTree::from_nodes(depth, unwrap(x))?,
        BinaryTree::from_nodes(depth, unwrap(xp))?,
    ))
}

#[allow(clippy::too_many_arguments)]
fn fill(
    strategy: &ObliviousStrategy,
    depth: usize,
    level: usize,
    prefix: u64,
    history: &mut Vec<Point>,
    signs: &mut Vec<i8>,
    x: &mut [Option<Point>],
    xp: &mut [Option<Point>],
    rng: &mut SimRng,
) -> Result<()> {
    let dist = kernel_at(strategy, history, signs)?;
    let a = dist.sample(rng);
    let b = dist.sample(rng);
    let idx = super::tree::node_index(level, prefix);
    x[idx] = Some(a.clone());
    xp[idx] = Some(b.clone());
    if level == depth {
        return Ok(());
    }
    for (sign, chosen) in [(-1i8, a), (1i8, b)] {
        history.push(chosen);
        signs.push(sign);
        fill(
            strategy,
            depth,
            level + 1,
            (prefix << 1) | u64::from(sign == 1),
            history,
            signs,
            x,
            xp,
            rng,
        )?;
        signs.pop();
        history.pop();
    }
    Ok(())
}

/// One path of the tree process, sampled without materializing the trees.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub path: Path,
    /// `x_t(eps)`.
    pub x: Vec<Point>,
    /// `x'_t(eps)`.
    pub x_prime: Vec<Point>,
    /// Conditional law each pair was drawn from.
    pub kernels: Vec<PointDist>,
}

/// Draws `eps` uniformly, then the `2T` node values along it. The joint
/// law of `(eps, x_t(eps), x'_t(eps))` equals that of a uniform path through
/// a pair from [`sample_tree_pair`]; any depth is allowed.
pub fn sample_path(
    strategy: &ObliviousStrategy,
    depth: usize,
    rng: &mut SimRng,
) -> Result<PathSample> {
    let signs: Vec<i8> = (0..depth)
        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
        .collect();
    sample_along(strategy, Path::new(signs)?, rng)
}

/// Values along a fixed path (the leftmost path in the lower-bound
/// construction).
pub fn sample_along(
    strategy: &ObliviousStrategy,
    path: Path,
    rng: &mut SimRng,
) -> Result<PathSample> {
    let depth = path.len();
    let mut x = Vec::with_capacity(depth);
    let mut x_prime = Vec::with_capacity(depth);
    let mut kernels = Vec::with_capacity(depth);
    let mut history: Vec<Point> = Vec::with_capacity(depth);
    for t in 0..depth {
        let dist = kernel_at(strategy, &history, &path.signs()[..t])?;
        let a = dist.sample(rng);
        let b = dist.sample(rng);
        history.push(if path.signs()[t] == 1 {
            b.clone()
        } else {
            a.clone()
        });
        x.push(a);
        x_prime.push(b);
        kernels.push(dist);
    }
    Ok(PathSample {
        path,
        x,
        x_prime,
        kernels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::stats::{ks_critical_01, ks_statistic};

    #[test]
    fn deterministic_levels() {
        let seq: Vec<Point> = (1..=4).map(Point::Index).collect();
        let s = ObliviousStrategy::Deterministic(seq);
        let (x, xp) = sample_tree_pair(&s, 4, &mut rng_from_seed(0)).unwrap();
        for t in 1..=4 {
            for p in 0..(1u64 << (t - 1)) {
                assert_eq!(*x.node(t, p), Point::Index(t));
                assert_eq!(*xp.node(t, p), Point::Index(t));
            }
        }
        assert!(sample_tree_pair(&s, 5, &mut rng_from_seed(0)).is_err());
    }

    struct Failing;
    impl Kernel for Failing {
        fn distribution(&self, history: &[Point], _t: usize) -> Result<PointDist> {
            if history.len() == 2 {
                Err(Error::InvalidParameter("boom".into()))
            } else {
                Ok(PointDist::UniformIndex(2))
            }
        }
    }

    #[test]
    fn kernel_failure_names_prefix() {
        let err = sample_tree_pair(
            &ObliviousStrategy::custom(Failing),
            3,
            &mut rng_from_seed(0),
        )
        .unwrap_err();
        match err {
            Error::Sampling { prefix, reason } => {
                assert_eq!(prefix, "--");
                assert!(reason.contains("boom"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iid_node_matches_law() {
        let s = ObliviousStrategy::Iid(PointDist::uniform_unit());
        let mut rng = rng_from_seed(11);
        let mut root = Vec::new();
        let mut deep = Vec::new();
        for _ in 0..10_000 {
            let (x, xp) = sample_tree_pair(&s, 3, &mut rng).unwrap();
            root.push(x.node(1, 0).primary_value());
            deep.push(xp.node(3, 2).primary_value());
        }
        let crit = ks_critical_01(10_000.0);
        assert!(ks_statistic(&root, |v| v.clamp(0.0, 1.0)) < crit);
        assert!(ks_statistic(&deep, |v| v.clamp(0.0, 1.0)) < crit);
    }

    #[test]
    fn twenty_levels_fit() {
        let s = ObliviousStrategy::Iid(PointDist::uniform_unit());
        let (x, xp) = sample_tree_pair(&s, 20, &mut rng_from_seed(1)).unwrap();
        assert_eq!(x.nodes().len(), (1 << 20) - 1);
        assert_eq!(xp.nodes().len(), (1 << 20) - 1);
    }

    /// Children on prefix (+1) follow p_2(. | x'_1); compared with a direct
    /// sampler of that conditional law by a chi-square test.
    #[test]
    fn markov_children_condition_on_tangent_root() {
        let s = ObliviousStrategy::Markov {
            initial: PointDist::Discrete(vec![
                (Point::Vector(vec![0.0]), 0.5),
                (Point::Vector(vec![10.0]), 0.5),
            ]),
            step: MarkovStep::PlusMinus { step: 1.0 },
        };
        let n = 100_000;
        let mut rng = rng_from_seed(5);
        let cats = [-1.0, 1.0, 9.0, 11.0];
        let cat = |v: f64| cats.iter().position(|c| *c == v).expect("known value");
        let mut tree_counts = [0u64; 4];
        let mut coupled = 0;
        for _ in 0..n {
            let (x, xp) = sample_tree_pair(&s, 2, &mut rng).unwrap();
            let root_prime = xp.node(1, 0).primary_value();
            let child = x.node(2, 1).primary_value();
            tree_counts[cat(child)] += 1;
            if (child - root_prime).abs() == 1.0 {
                coupled += 1;
            }
        }
        assert_eq!(coupled, n, "right children must be one step from x'_1");
        let mut direct = [0u64; 4];
        for _ in 0..n {
            let r = s.kernel(&[]).unwrap().sample(&mut rng);
            let c = s.kernel(&[r]).unwrap().sample(&mut rng);
            direct[cat(c.primary_value())] += 1;
        }
        // two-sample chi-square, 3 degrees of freedom, critical value at 0.01
        let chi2: f64 = (0..4)
            .map(|k| {
                let (a, b) = (tree_counts[k] as f64, direct[k] as f64);
                (a - b).powi(2) / (a + b)
            })
            .sum();
        assert!(chi2 < 11.345, "chi2 = {chi2}");
    }

    #[test]
    fn lazy_path_matches_full_tree_path() {
        let s = ObliviousStrategy::Markov {
            initial: PointDist::UniformIndex(5),
            step: MarkovStep::IndexWalk { n: 5 },
        };
        let n = 20_000;
        let mut rng = rng_from_seed(9);
        let lazy: Vec<f64> = (0..n)
            .map(|_| sample_path(&s, 4, &mut rng).unwrap().x[3].primary_value())
            .collect();
        let full: Vec<f64> = (0..n)
            .map(|_| {
                let bits = rng.gen_range(0..16u64);
                let (x, _) = sample_tree_pair(&s, 4, &mut rng).unwrap();
                let v = x.path_values_bits(bits).nth(3).unwrap().primary_value();
                v
            })
            .collect();
        let d = crate::stats::ks_two_sample(&lazy, &full);
        assert!(d < 1.63 * (2.0 / n as f64).sqrt(), "ks {d}");
    }
}
