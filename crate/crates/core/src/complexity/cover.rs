//! Sequential covering numbers of finite classes on a fixed tree.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::domain::{FiniteTable, FunctionClass, Point};
use crate::error::{Error, Result};
use crate::trees::{node_index, BinaryTree};

pub const MAX_COVER_FUNCTIONS: usize = 64;
pub const MAX_COVER_DEPTH: usize = 10;
/// Branch-and-bound nodes explored before settling for the greedy cover.
pub const COVER_NODE_BUDGET: usize = 2_000_000;

/// Path-average norm `(1/T sum_t |v_t - f_t|^p)^(1/p)`; `Sup` is the max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PNorm {
    L1,
    L2,
    Sup,
}

impl PNorm {
    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            PNorm::L1 => diffs.sum::<f64>() / n,
            PNorm::L2 => (diffs.map(|d| d * d).sum::<f64>() / n).sqrt(),
            PNorm::Sup => diffs.fold(0.0, f64::max),
        }
    }
}

/// Size of the smallest cover found, with a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverResult {
    pub size: usize,
    /// Max over paths of the largest set of profiles pairwise farther than
    /// `2 alpha`; no cover of any kind can be smaller.
    pub lower_bound: usize,
    /// `size` equals `lower_bound`, so it is the true covering number.
    pub certified: bool,
    /// The search budget ran out; `size` is a greedy upper bound.
    pub upper_bound_only: bool,
}

/// Profiles of a finite class on one tree, with the candidate cover trees.
#[derive(Debug, Clone)]
pub struct CoverInstance {
    depth: usize,
    /// `values[f][node]`.
    values: Vec<Vec<f64>>,
    /// Candidate cover trees, node-indexed like `values`.
    candidates: Vec<Vec<f64>>,
    /// Distinct `(path, profile)` elements: `(path, representative f)`.
    elements: Vec<(u64, usize)>,
}

impl CoverInstance {
    pub fn new(table: &FiniteTable, tree: &BinaryTree<Point>) -> Result<Self> {
        if table.len() > MAX_COVER_FUNCTIONS || tree.depth() > MAX_COVER_DEPTH {
            return Err(Error::BudgetExceeded {
                work: (table.len() * (1 << tree.depth())) as f64,
                budget: (MAX_COVER_FUNCTIONS << MAX_COVER_DEPTH) as f64,
            });
        }
        let mut values = Vec::with_capacity(table.len());
        for row in table.rows() {
            let mut v = Vec::with_capacity(tree.nodes().len());
            for node in tree.nodes() {
                match node {
                    Point::Index(j) if *j < table.domain_size() => v.push(row[*j]),
                    other => {
                        return Err(Error::DomainMismatch {
                            class: "FiniteTable",
                            point: other.to_string(),
                        })
                    }
                }
            }
            values.push(v);
        }
        let depth = tree.depth();
        let n_nodes = values[0].len();
        let mut candidates: Vec<Vec<f64>> = values.clone();
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                candidates.push(
                    values[i]
                        .iter()
                        .zip(&values[j])
                        .map(|(a, b)| 0.5 * (a + b))
                        .collect(),
                );
            }
        }
        candidates.push(vec![0.0; n_nodes]);
        let inv = 1.0 / values.len() as f64;
        candidates.push(
            (0..n_nodes)
                .map(|k| values.iter().map(|v| v[k]).sum::<f64>() * inv)
                .collect(),
        );
        dedup_vectors(&mut candidates);

        let mut inst = Self {
            depth,
            values,
            candidates,
            elements: Vec::new(),
        };
        let mut seen = HashMap::new();
        for path in 0..inst.n_paths() {
            for f in 0..inst.values.len() {
                let key: Vec<u64> = inst
                    .profile(&inst.values[f], path)
                    .iter()
                    .map(|x| x.to_bits())
                    .collect();
                seen.entry((path, key))
                    .or_insert_with(|| inst.elements.push((path, f)));
            }
        }
        Ok(inst)
    }

    pub fn from_class(class: &FunctionClass, tree: &BinaryTree<Point>) -> Result<Self> {
        let table = class.as_table().ok_or_else(|| {
            Error::InvalidParameter(format!(
                "covering numbers need a FiniteTable, got {}",
                class.variant_name()
            ))
        })?;
        Self::new(table, tree)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Paths are determined by `eps_{1:T-1}`.
    pub fn n_paths(&self) -> u64 {
        1 << (self.depth - 1)
    }

    fn node_on_path(&self, path: u64, level: usize) -> usize {
        node_index(level, path >> (self.depth - level))
    }

    fn profile(&self, tree_values: &[f64], path: u64) -> Vec<f64> {
        (1..=self.depth)
            .map(|t| tree_values[self.node_on_path(path, t)])
            .collect()
    }

    /// `dist[c][e]` between candidate `c` and element `e`.
    pub fn distances(&self, p: PNorm) -> Vec<Vec<f64>> {
        self.candidates
            .iter()
            .map(|c| {
                self.elements
                    .iter()
                    .map(|(path, f)| {
                        p.distance(
                            &self.profile(c, *path),
                            &self.profile(&self.values[*f], *path),
                        )
                    })
                    .collect()
            })
            .collect()
    }

    /// Covering number at scale `alpha`.
    pub fn cover(&self, alpha: f64, p: PNorm) -> CoverResult {
        self.cover_with(&self.distances(p), alpha, p)
    }

    /// [`CoverInstance::cover`] with precomputed [`CoverInstance::distances`].
    pub fn cover_with(&self, dist: &[Vec<f64>], alpha: f64, p: PNorm) -> CoverResult {
        let lower_bound = self.clique_lower_bound(alpha, p);
        if alpha == 0.0 {
            let size = self.exact_zero_scale();
            return CoverResult {
                size,
                lower_bound: lower_bound.max(size),
                certified: true,
                upper_bound_only: false,
            };
        }
        let tol = 1e-12 * alpha.max(1.0);
        let n_el = self.elements.len();
        let sets: Vec<Bitset> = dist
            .iter()
            .map(|row| {
                let mut b = Bitset::new(n_el);
                for (e, d) in row.iter().enumerate() {
                    if *d <= alpha + tol {
                        b.set(e);
                    }
                }
                b
            })
            .collect();
        let (size, exhausted) = min_set_cover(&sets, n_el, lower_bound);
        CoverResult {
            size,
            lower_bound,
            certified: size == lower_bound,
            upper_bound_only: exhausted,
        }
    }

    /// Largest pairwise-far profile set over all paths (far means distance
    /// above `2 alpha`).
    pub fn clique_lower_bound(&self, alpha: f64, p: PNorm) -> usize {
        let slack = 1e-12 * alpha.max(1.0);
        let mut best = 1;
        for path in 0..self.n_paths() {
            let mut profiles: Vec<Vec<f64>> =
                self.values.iter().map(|v| self.profile(v, path)).collect();
            dedup_vectors(&mut profiles);
            let n = profiles.len();
            if n <= best {
                continue;
            }
            let mut adj = vec![0u64; n];
            for i in 0..n {
                for j in i + 1..n {
                    if p.distance(&profiles[i], &profiles[j]) > 2.0 * alpha + slack {
                        adj[i] |= 1 << j;
                        adj[j] |= 1 << i;
                    }
                }
            }
            let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
            best = best.max(max_clique(&adj, 0, all, best));
        }
        best
    }

    /// Exact covering number at scale 0: at each node, functions split by
    /// their value there; a group needs as many trees as the larger of its
    /// two subtrees.
    pub fn exact_zero_scale(&self) -> usize {
        let all: Vec<usize> = (0..self.values.len()).collect();
        self.zero_rec(1, 0, &all)
    }

    fn zero_rec(&self, level: usize, prefix: u64, group: &[usize]) -> usize {
        let idx = node_index(level, prefix);
        let mut by_value: Vec<(u64, Vec<usize>)> = Vec::new();
        for &f in group {
            let key = self.values[f][idx].to_bits();
            match by_value.iter_mut().find(|(k, _)| *k == key) {
                Some((_, g)) => g.push(f),
                None => by_value.push((key, vec![f])),
            }
        }
        if level == self.depth {
            return by_value.len();
        }
        by_value
            .iter()
            .map(|(_, g)| {
                let left = self.zero_rec(level + 1, prefix << 1, g);
                let right = self.zero_rec(level + 1, (prefix << 1) | 1, g);
                left.max(right)
            })
            .sum()
    }

    /// Number of distinct profiles of the class on the whole tree.
    pub fn distinct_profiles(&self) -> usize {
        let mut v = self.values.clone();
        dedup_vectors(&mut v);
        v.len()
    }
}

/// `N_p(alpha, F, x)` for a finite table on a tree.
pub fn covering_number(
    class: &FunctionClass,
    tree: &BinaryTree<Point>,
    alpha: f64,
    p: PNorm,
) -> Result<CoverResult> {
    if alpha.is_nan() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "cover scale {alpha} must be nonnegative"
        )));
    }
    Ok(CoverInstance::from_class(class, tree)?.cover(alpha, p))
}

fn dedup_vectors(v: &mut Vec<Vec<f64>>) {
    let mut seen = std::collections::HashSet::new();
    v.retain(|x| seen.insert(x.iter().map(|y| y.to_bits()).collect::<Vec<_>>()));
}

fn max_clique(adj: &[u64], size: usize, candidates: u64, best: usize) -> usize {
    if candidates == 0 {
        return size.max(best);
    }
    if size + candidates.count_ones() as usize <= best {
        return best;
    }
    let mut best = best;
    let mut cand = candidates;
    while cand != 0 {
        if size + cand.count_ones() as usize <= best {
            break;
        }
        let v = cand.trailing_zeros() as usize;
        cand &= !(1 << v);
        best = max_clique(adj, size + 1, cand & adj[v], best);
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bitset(Vec<u64>);

impl Bitset {
    fn new(n: usize) -> Self {
        Bitset(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut b = Self::new(n);
        for i in 0..n {
            b.set(i);
        }
        b
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn and_count(&self, other: &Bitset) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn minus(&self, other: &Bitset) -> Bitset {
        Bitset(self.0.iter().zip(&other.0).map(|(a, b)| a & !b).collect())
    }

    fn is_subset(&self, other: &Bitset) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, w)| {
            let mut w = *w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + b)
            })
        })
    }
}

/// Minimum number of sets covering `0..n`, by branch and bound seeded with
/// the greedy cover. Returns `(size, budget_exhausted)`.
fn min_set_cover(sets: &[Bitset], n: usize, lower_bound: usize) -> (usize, bool) {
    // drop empty, duplicate and dominated sets
    let mut order: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].count() > 0).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(sets[i].count()));
    let mut kept: Vec<&Bitset> = Vec::new();
    for &i in &order {
        if !kept.iter().any(|k| sets[i].is_subset(k)) {
            kept.push(&sets[i]);
        }
    }
    let universe = Bitset::full(n);
    if kept.is_empty() {
        return (usize::MAX, false);
    }
    let greedy = greedy_cover(&kept, &universe);
    if greedy <= lower_bound.max(1) {
        return (greedy, false);
    }
    let covering: Vec<Vec<usize>> = {
        let mut c = vec![Vec::new(); n];
        for (s, set) in kept.iter().enumerate() {
            for e in set.iter() {
                c[e].push(s);
            }
        }
        c
    };
    let mut search = Search {
        sets: &kept,
        covering: &covering,
        best: greedy,
        nodes: 0,
        exhausted: false,
        floor: lower_bound,
    };
    search.run(&universe, 0);
    (search.best, search.exhausted)
}

fn greedy_cover(sets: &[&Bitset], universe: &Bitset) -> usize {
    let mut left = universe.clone();
    let mut count = 0;
    while left.count() > 0 {
        let best = sets
            .iter()
            .max_by_key(|s| s.and_count(&left))
            .expect("nonempty");
        if best.and_count(&left) == 0 {
            return usize::MAX;
        }
        left = left.minus(best);
        count += 1;
    }
    count
}

struct Search<'a> {
    sets: &'a [&'a Bitset],
    covering: &'a [Vec<usize>],
    best: usize,
    nodes: usize,
    exhausted: bool,
    floor: usize,
}

impl Search<'_> {
    fn run(&mut self, uncovered: &Bitset, used: usize) {
        if self.best <= self.floor || self.exhausted {
            return;
        }
        self.nodes += 1;
        if self.nodes > COVER_NODE_BUDGET {
            self.exhausted = true;
            return;
        }
        let remaining = uncovered.count();
        if remaining == 0 {
            self.best = self.best.min(used);
            return;
        }
        let widest = self
            .sets
            .iter()
            .map(|s| s.and_count(uncovered))
            .max()
            .unwrap_or(0);
        if widest == 0 || used + remaining.div_ceil(widest) >= self.best {
            return;
        }
        // branch on the uncovered element with the fewest options
        let e = uncovered
            .iter()
            .min_by_key(|&e| self.covering[e].len())
            .or_else(|| uncovered.first())
            .expect("nonempty");
        let mut options: Vec<usize> = self.covering[e].clone();
        options.sort_by_key(|&s| std::cmp::Reverse(self.sets[s].and_count(uncovered)));
        for s in options {
            let next = uncovered.minus(self.sets[s]);
            self.run(&next, used + 1);
        }
        debug_assert!(uncovered.get(e));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::PointDist;
    use crate::rng::rng_from_seed;
    use crate::trees::{sample_tree_pair, ObliviousStrategy};
    use rand::Rng;

    fn tree(depth: usize, domain: usize, seed: u64) -> BinaryTree<Point> {
        let s = ObliviousStrategy::Iid(PointDist::UniformIndex(domain));
        sample_tree_pair(&s, depth, &mut rng_from_seed(seed))
            .unwrap()
            .0
    }

    fn zero_one() -> FunctionClass {
        FunctionClass::finite_table(vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]]).unwrap()
    }

    #[test]
    fn constants_zero_one() {
        for seed in 0..5 {
            let x = tree(4, 3, seed);
            let half = covering_number(&zero_one(), &x, 0.5, PNorm::L2).unwrap();
            assert_eq!(half.size, 1);
            assert!(half.certified);
            let r = covering_number(&zero_one(), &x, 0.4, PNorm::L2).unwrap();
            assert_eq!((r.size, r.lower_bound), (2, 2));
            assert_eq!(
                covering_number(&zero_one(), &x, 0.0, PNorm::L2)
                    .unwrap()
                    .size,
                2
            );
        }
    }

    #[test]
    fn scale_one_needs_one_tree() {
        let mut rng = rng_from_seed(3);
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..4).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        let c = FunctionClass::finite_table(rows).unwrap();
        for p in [PNorm::L1, PNorm::L2, PNorm::Sup] {
            assert_eq!(covering_number(&c, &tree(5, 4, 1), 1.0, p).unwrap().size, 1);
        }
    }

    #[test]
    fn zero_scale_can_beat_profile_count() {
        // f = (L0, R0), g = (L1, R0), h = (L1, R1) with a shared root:
        // two trees suffice although there are three profiles
        let x = BinaryTree::from_nodes(2, vec![Point::Index(0), Point::Index(1), Point::Index(2)])
            .unwrap();
        let c = FunctionClass::finite_table(vec![
            vec![0.5, 0.0, 0.0],
            vec![0.5, 1.0, 0.0],
            vec![0.5, 1.0, 1.0],
        ])
        .unwrap();
        let inst = CoverInstance::from_class(&c, &x).unwrap();
        assert_eq!(inst.distinct_profiles(), 3);
        assert_eq!(inst.exact_zero_scale(), 2);
        // matches the small-scale limit of the set cover
        assert_eq!(inst.cover(1e-9, PNorm::L2).size, 2);
    }

    #[test]
    fn cover_is_monotone_and_bounded() {
        let mut rng = rng_from_seed(8);
        for seed in 0..5 {
            let rows: Vec<Vec<f64>> = (0..7)
                .map(|_| (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect())
                .collect();
            let c = FunctionClass::finite_table(rows).unwrap();
            let inst = CoverInstance::from_class(&c, &tree(4, 3, seed)).unwrap();
            let mut prev = usize::MAX;
            for k in 0..=20 {
                let r = inst.cover(k as f64 * 0.05, PNorm::L2);
                assert!(r.size <= prev && r.size >= r.lower_bound && r.size <= 7);
                assert!(!r.upper_bound_only);
                prev = r.size;
            }
        }
    }

    #[test]
    fn too_large_instances_are_rejected() {
        let c = FunctionClass::finite_table(vec![vec![0.0; 2]; 65]).unwrap();
        assert!(matches!(
            covering_number(&c, &tree(3, 2, 0), 0.1, PNorm::L2),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
