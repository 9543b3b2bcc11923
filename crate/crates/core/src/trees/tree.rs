use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Largest depth for which whole trees are materialized.
pub const MAX_FULL_DEPTH: usize = 24;

/// Sign sequence `(eps_1, .., eps_T)` with entries in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    signs: Vec<i8>,
}

impl Path {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidParameter(format!(
                "path sign {s} is not +1 or -1"
            )));
        }
        Ok(Self { signs })
    }

    /// The all-(-1) path.
    pub fn leftmost(depth: usize) -> Self {
        Self {
            signs: vec![-1; depth],
        }
    }

    /// Path whose sign `t` is `+1` iff bit `depth - 1 - t` of `bits` is set
    /// (`eps_1` is the most significant bit).
    pub fn from_bits(bits: u64, depth: usize) -> Self {
        let signs = (0..depth)
            .map(|t| {
                if bits >> (depth - 1 - t) & 1 == 1 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Self { signs }
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Bits of `eps_1, .., eps_k` read as an integer, `eps_1` most significant.
    pub fn prefix_bits(&self, k: usize) -> u64 {
        self.signs[..k]
            .iter()
            .fold(0, |acc, &s| (acc << 1) | u64::from(s == 1))
    }
}

/// Selector: `x_prime` on `+1`, `x` on `-1`.
pub fn chi<'a, P>(x: &'a P, x_prime: &'a P, sign: i8) -> &'a P {
    if sign == 1 {
        x_prime
    } else {
        x
    }
}

/// Complete binary tree of depth `T`, stored level-major: the node at level
/// `t` (1-based) on sign prefix `eps_{1:t-1}` lives at
/// `2^{t-1} - 1 + prefix_bits`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTree<P> {
    depth: usize,
    nodes: Vec<P>,
}

pub fn node_index(level: usize, prefix: u64) -> usize {
    (1usize << (level - 1)) - 1 + prefix as usize
}

impl<P: Clone> BinaryTree<P> {
    pub fn constant(depth: usize, value: P) -> Result<Self> {
        check_depth(depth)?;
        Ok(Self {
            depth,
            nodes: vec![value; (1 << depth) - 1],
        })
    }

    /// Tree whose level-`t` nodes all hold `values[t - 1]`.
    pub fn from_levels(values: &[P]) -> Result<Self> {
        check_depth(values.len())?;
        let mut nodes = Vec::with_capacity((1 << values.len()) - 1);
        for (t, v) in values.iter().enumerate() {
            nodes.extend(std::iter::repeat_n(v.clone(), 1 << t));
        }
        Ok(Self {
            depth: values.len(),
            nodes,
        })
    }

    pub fn map<Q>(&self, f: impl FnMut(&P) -> Q) -> BinaryTree<Q> {
        BinaryTree {
            depth: self.depth,
            nodes: self.nodes.iter().map(f).collect(),
        }
    }
}

impl<P> BinaryTree<P> {
    /// Builds from level-major nodes (length `2^T - 1`).
    pub fn from_nodes(depth: usize, nodes: Vec<P>) -> Result<Self> {
        check_depth(depth)?;
        if nodes.len() != (1 << depth) - 1 {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} tree needs {} nodes, got {}",
                (1usize << depth) - 1,
                nodes.len()
            )));
        }
        Ok(Self { depth, nodes })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nodes(&self) -> &[P] {
        &self.nodes
    }

    pub fn node(&self, level: usize, prefix: u64) -> &P {
        &self.nodes[node_index(level, prefix)]
    }

    /// `(x_1(eps), .., x_T(eps))`.
    pub fn path_values(&self, path: &Path) -> Result<Vec<&P>> {
        if path.len() != self.depth {
            return Err(Error::PathLength {
                path: path.len(),
                depth: self.depth,
            });
        }
        Ok((1..=self.depth)
            .map(|t| self.node(t, path.prefix_bits(t - 1)))
            .collect())
    }

    /// Same as [`BinaryTree::path_values`] addressed by the path's bits.
    pub fn path_values_bits(&self, bits: u64) -> impl Iterator<Item = &P> + '_ {
        let d = self.depth;
        (1..=d).map(move |t| self.node(t, bits >> (d - t + 1)))
    }

    /// CSV dump with header `level,prefix,value`; `prefix` is the sign
    /// prefix as a bit string (`0` for -1, `1` for +1), empty at the root.
    pub fn dump_csv(&self, value: impl Fn(&P) -> String) -> String {
        let mut out = String::from("level,prefix,value\n");
        for t in 1..=self.depth {
            for prefix in 0..(1u64 << (t - 1)) {
                let bits: String = (0..t - 1)
                    .map(|k| {
                        if prefix >> (t - 2 - k) & 1 == 1 {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect();
                let _ = writeln!(out, "{t},{bits},{}", value(self.node(t, prefix)));
            }
        }
        out
    }
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 || depth > MAX_FULL_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "tree depth {depth} outside 1..={MAX_FULL_DEPTH}; use lazy path sampling for deeper games"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chi_examples() {
        assert_eq!(*chi(&'a', &'b', 1), 'b');
        assert_eq!(*chi(&'a', &'b', -1), 'a');
        assert_eq!(*chi(&'a', &'a', 1), 'a');
        assert_eq!(*chi(&'a', &'a', -1), 'a');
    }

    #[test]
    fn path_values_examples() {
        let t = BinaryTree::from_nodes(1, vec![7]).unwrap();
        assert_eq!(
            t.path_values(&Path::new(vec![1]).unwrap()).unwrap(),
            vec![&7]
        );
        let c = BinaryTree::constant(3, 2).unwrap();
        assert_eq!(
            c.path_values(&Path::new(vec![1, -1, 1]).unwrap()).unwrap(),
            vec![&2, &2, &2]
        );
        let t = BinaryTree::from_nodes(2, vec!['r', 'a', 'b']).unwrap();
        assert_eq!(
            t.path_values(&Path::new(vec![1, -1]).unwrap()).unwrap(),
            vec![&'r', &'b']
        );
        assert_eq!(
            t.path_values(&Path::new(vec![-1, 1]).unwrap()).unwrap(),
            vec![&'r', &'a']
        );
        assert!(matches!(
            t.path_values(&Path::leftmost(3)),
            Err(Error::PathLength { path: 3, depth: 2 })
        ));
    }

    #[test]
    fn bits_and_signs_agree() {
        let t = BinaryTree::from_nodes(3, (0..7).collect()).unwrap();
        for bits in 0..8 {
            let p = Path::from_bits(bits, 3);
            let a: Vec<i32> = t.path_values(&p).unwrap().into_iter().copied().collect();
            let b: Vec<i32> = t.path_values_bits(bits).copied().collect();
            assert_eq!(a, b);
        }
        // leftmost path visits nodes 0, 1, 3
        assert_eq!(
            t.path_values_bits(0).copied().collect::<Vec<_>>(),
            vec![0, 1, 3]
        );
        assert_eq!(
            t.path_values_bits(7).copied().collect::<Vec<_>>(),
            vec![0, 2, 6]
        );
    }

    #[test]
    fn bad_inputs() {
        assert!(Path::new(vec![1, 0]).is_err());
        assert!(BinaryTree::from_nodes(2, vec![1, 2]).is_err());
        assert!(BinaryTree::constant(25, 0u8).is_err());
    }

    #[test]
    fn dump_format() {
        let t = BinaryTree::from_nodes(2, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            t.dump_csv(|v| v.to_string()),
            "level,prefix,value\n1,,1\n2,0,2\n2,1,3\n"
        );
    }

    proptest! {
        #[test]
        fn chi_symmetry(x in any::<i32>(), y in any::<i32>(), plus in any::<bool>()) {
            let e: i8 = if plus { 1 } else { -1 };
            prop_assert_eq!(chi(&x, &y, e), chi(&y, &x, -e));
        }
    }
}
