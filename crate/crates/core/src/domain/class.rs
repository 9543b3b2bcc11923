use serde::{Deserialize, Serialize};

use super::point::{Hypothesis, Point};
use crate::coord::Coord;
use crate::error::{Error, Result};

/// Norm of a [`FunctionClass::LinearBall`]; the adversary's moves are
/// measured in the dual norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallNorm {
    /// l2 ball, l2 dual.
    Euclidean,
    /// l1 ball, sup-norm dual.
    SupDual,
}

/// Finite class given by a `|F| x |X|` value table over an abstract domain
/// `{0, .., |X|-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTable {
    rows: Vec<Vec<f64>>,
    domain_size: usize,
}

impl FiniteTable {
    /// Rows are functions, columns domain points. Values must lie in `[-1, 1]`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_range(rows, true)
    }

    /// Like [`FiniteTable::new`] but accepts any finite values (scaled
    /// classes in the structural-property checks leave `[-1, 1]`).
    pub fn unbounded(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_range(rows, false)
    }

    fn with_range(rows: Vec<Vec<f64>>, bounded: bool) -> Result<Self> {
        let domain_size = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || domain_size == 0 {
            return Err(Error::InvalidParameter(
                "finite table needs at least one row and column".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != domain_size {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has {} columns, expected {domain_size}",
                    row.len()
                )));
            }
            if let Some(v) = row
                .iter()
                .find(|v| !v.is_finite() || (bounded && v.abs() > 1.0))
            {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has value {v} outside [-1, 1]"
                )));
            }
        }
        Ok(Self { rows, domain_size })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.rows[row][col]
    }
}

/// `N` thresholds equally spaced strictly inside `[margin, 1 - margin]`:
/// `theta_i = margin + (i + 1) (1 - 2 margin) / (N + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    resolution: u64,
    margin: f64,
}

impl ThresholdGrid {
    /// Largest supported resolution; keeps the grid strictly increasing in `f64`.
    pub const MAX_RESOLUTION: u64 = 1 << 44;

    pub fn new(resolution: u64, margin: f64) -> Result<Self> {
        if resolution == 0 || resolution > Self::MAX_RESOLUTION {
            return Err(Error::InvalidParameter(format!(
                "threshold resolution {resolution} out of range"
            )));
        }
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::InvalidParameter(format!(
                "threshold margin {margin} not in [0, 1/2)"
            )));
        }
        Ok(Self { resolution, margin })
    }

    pub fn resolution(&self) -> u64 {
        self.resolution
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn threshold(&self, i: u64) -> f64 {
        let step = (1.0 - 2.0 * self.margin) / (self.resolution + 1) as f64;
        self.margin + (i + 1) as f64 * step
    }

    pub fn threshold_coord(&self, i: u64) -> Coord {
        Coord::from_f64(self.threshold(i))
    }

    /// Number of thresholds `theta_i <= z`; grid experts with index at least
    /// this value predict 1 at `z`.
    pub fn count_at_or_below(&self, z: Coord) -> u64 {
        let approx = ((z.to_f64() - self.margin)
            / ((1.0 - 2.0 * self.margin) / (self.resolution + 1) as f64))
            .floor();
        let guess = if approx.is_finite() {
            approx.clamp(0.0, self.resolution as f64) as u64
        } else {
            0
        };
        // widen around the guess, then bisect with exact comparisons
        let mut lo = guess.saturating_sub(2);
        let mut hi = (guess + 2).min(self.resolution);
        if lo > 0 && self.threshold_coord(lo - 1) > z {
            lo = 0;
        }
        if hi < self.resolution && self.threshold_coord(hi) <= z {
            hi = self.resolution;
        }
        // invariant: answer in [lo, hi]
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.threshold_coord(mid) <= z {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Evaluable hypothesis set.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionClass {
    FiniteTable(FiniteTable),
    LinearBall {
        dimension: usize,
        radius: f64,
        norm: BallNorm,
    },
    Simplex {
        dimension: usize,
    },
    ThresholdGrid(ThresholdGrid),
    /// Every threshold in `[margin, 1 - margin]`; the comparator class of the
    /// halving and smoothed games.
    ThresholdInterval {
        margin: f64,
    },
}

impl FunctionClass {
    pub fn finite_table(rows: Vec<Vec<f64>>) -> Result<Self> {
        FiniteTable::new(rows).map(FunctionClass::FiniteTable)
    }

    pub fn linear_ball(dimension: usize, radius: f64, norm: BallNorm) -> Result<Self> {
        if dimension == 0 || !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "linear ball dimension {dimension}, radius {radius}"
            )));
        }
        Ok(FunctionClass::LinearBall {
            dimension,
            radius,
            norm,
        })
    }

    pub fn simplex(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidParameter(
                "simplex dimension must be positive".into(),
            ));
        }
        Ok(FunctionClass::Simplex { dimension })
    }

    pub fn threshold_grid(resolution: u64, margin: f64) -> Result<Self> {
        ThresholdGrid::new(resolution, margin).map(FunctionClass::ThresholdGrid)
    }

    pub fn threshold_interval(margin: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&margin) {
            return Err(Error::InvalidParameter(format!(
                "threshold margin {margin} not in [0, 1/2)"
            )));
        }
        Ok(FunctionClass::ThresholdInterval { margin })
    }

    /// Finite table of the threshold predictors `z -> 1{z < theta_i}` on the
    /// domain points `zs` (the z-part of the threshold class).
    pub fn threshold_table(grid: &ThresholdGrid, zs: &[f64]) -> Result<Self> {
        if grid.resolution() > 1 << 16 {
            return Err(Error::InvalidParameter(
                "threshold table limited to 65536 rows".into(),
            ));
        }
        let rows = (0..grid.resolution())
            .map(|i| {
                zs.iter()
                    .map(|&z| if z < grid.threshold(i) { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self::finite_table(rows)
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            FunctionClass::FiniteTable(_) => "FiniteTable",
            FunctionClass::LinearBall { .. } => "LinearBall",
            FunctionClass::Simplex { .. } => "Simplex",
            FunctionClass::ThresholdGrid(_) => "ThresholdGrid",
            FunctionClass::ThresholdInterval { .. } => "ThresholdInterval",
        }
    }

    /// Number of hypotheses for finite classes.
    pub fn cardinality(&self) -> Option<u64> {
        match self {
            FunctionClass::FiniteTable(t) => Some(t.len() as u64),
            FunctionClass::ThresholdGrid(g) => Some(g.resolution()),
            _ => None,
        }
    }

    pub fn as_table(&self) -> Option<&FiniteTable> {
        match self {
            FunctionClass::FiniteTable(t) => Some(t),
            _ => None,
        }
    }

    /// Vector dimension of linear classes.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            FunctionClass::LinearBall { dimension, .. } | FunctionClass::Simplex { dimension } => {
                Some(*dimension)
            }
            _ => None,
        }
    }

    /// Hypothesis played when nothing has been observed: row 0, grid
    /// index 0, the zero vector, the uniform simplex point, or the lowest
    /// interval threshold.
    pub fn default_hypothesis(&self) -> Hypothesis {
        match self {
            FunctionClass::FiniteTable(_) | FunctionClass::ThresholdGrid(_) => Hypothesis::Index(0),
            FunctionClass::LinearBall { dimension, .. } => {
                Hypothesis::Vector(vec![0.0; *dimension])
            }
            FunctionClass::Simplex { dimension } => {
                Hypothesis::Vector(vec![1.0 / *dimension as f64; *dimension])
            }
            FunctionClass::ThresholdInterval { margin } => {
                Hypothesis::Threshold(Coord::from_f64(*margin))
            }
        }
    }

    /// Membership test (floating tolerance `1e-9`).
    pub fn contains(&self, h: &Hypothesis) -> bool {
        const TOL: f64 = 1e-9;
        match (self, h) {
            (FunctionClass::FiniteTable(t), Hypothesis::Index(i)) => *i < t.len(),
            (FunctionClass::ThresholdGrid(g), Hypothesis::Index(i)) => (*i as u64) < g.resolution(),
            (
                FunctionClass::LinearBall {
                    dimension,
                    radius,
                    norm,
                },
                Hypothesis::Vector(v),
            ) => v.len() == *dimension && ball_norm(*norm, v) <= radius * (1.0 + TOL) + TOL,
            (FunctionClass::Simplex { dimension }, Hypothesis::Vector(v)) => {
                v.len() == *dimension
                    && v.iter().all(|&w| w >= -TOL)
                    && (v.iter().sum::<f64>() - 1.0).abs() <= TOL
            }
            (FunctionClass::ThresholdInterval { margin }, Hypothesis::Threshold(t)) => {
                *t >= Coord::from_f64(*margin) && *t <= Coord::from_f64(1.0 - margin)
            }
            _ => false,
        }
    }

    /// `f(x)`: the inner product for linear classes, the table entry, the
    /// threshold prediction `1{z < theta}`; on a labeled point `(x, y)` the
    /// absolute loss `|f(x) - y|`.
    pub fn evaluate(&self, h: &Hypothesis, x: &Point) -> Result<f64> {
        match x {
            Point::Labeled { x, y } => Ok((self.evaluate_unlabeled(h, x)? - y).abs()),
            other => self.evaluate_unlabeled(h, other),
        }
    }

    fn evaluate_unlabeled(&self, h: &Hypothesis, x: &Point) -> Result<f64> {
        if !self.contains(h) {
            return Err(Error::HypothesisMismatch {
                class: self.variant_name(),
                hypothesis: h.to_string(),
            });
        }
        let mismatch = || Error::DomainMismatch {
            class: self.variant_name(),
            point: x.variant_name().to_string(),
        };
        match (self, h, x) {
            (FunctionClass::FiniteTable(t), Hypothesis::Index(i), Point::Index(j)) => {
                if *j >= t.domain_size() {
                    return Err(Error::DomainMismatch {
                        class: "FiniteTable",
                        point: format!("index {j} outside domain of size {}", t.domain_size()),
                    });
                }
                Ok(t.value(*i, *j))
            }
            (
                FunctionClass::LinearBall { .. } | FunctionClass::Simplex { .. },
                Hypothesis::Vector(f),
                Point::Vector(v),
            ) => {
                if f.len() != v.len() {
                    return Err(Error::DomainMismatch {
                        class: self.variant_name(),
                        point: format!("vector of dimension {} (class has {})", v.len(), f.len()),
                    });
                }
                Ok(dot(f, v))
            }
            (FunctionClass::ThresholdGrid(g), Hypothesis::Index(i), Point::Scalar(z)) => {
                Ok(if *z < g.threshold_coord(*i as u64) {
                    1.0
                } else {
                    0.0
                })
            }
            (
                FunctionClass::ThresholdInterval { .. },
                Hypothesis::Threshold(theta),
                Point::Scalar(z),
            ) => Ok(if z < theta { 1.0 } else { 0.0 }),
            _ => Err(mismatch()),
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Norm of the class itself (not the dual).
pub fn ball_norm(norm: BallNorm, v: &[f64]) -> f64 {
    match norm {
        BallNorm::Euclidean => l2_norm(v),
        BallNorm::SupDual => l1_norm(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_example() {
        // theta = 0.5 is the only threshold of a 1-point grid
        let c = FunctionClass::threshold_grid(1, 0.0).unwrap();
        let v = c
            .evaluate(&Hypothesis::Index(0), &Point::pair(0.3, 1.0))
            .unwrap();
        assert_eq!(v, 0.0);
        let v = c
            .evaluate(&Hypothesis::Index(0), &Point::pair(0.7, 1.0))
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn linear_example() {
        let c = FunctionClass::linear_ball(2, 1.0, BallNorm::Euclidean).unwrap();
        let v = c
            .evaluate(
                &Hypothesis::Vector(vec![1.0, 0.0]),
                &Point::Vector(vec![0.2, -0.7]),
            )
            .unwrap();
        assert_eq!(v, 0.2);
    }

    #[test]
    fn table_lookup() {
        let c = FunctionClass::finite_table(vec![vec![0.1, 0.2], vec![-0.3, 0.4]]).unwrap();
        assert_eq!(
            c.evaluate(&Hypothesis::Index(1), &Point::Index(0)).unwrap(),
            -0.3
        );
        assert_eq!(
            c.evaluate(&Hypothesis::Index(0), &Point::Index(1)).unwrap(),
            0.2
        );
    }

    #[test]
    fn domain_mismatch_names_variant() {
        let c = FunctionClass::threshold_grid(4, 0.0).unwrap();
        let err = c
            .evaluate(&Hypothesis::Index(0), &Point::Vector(vec![1.0]))
            .unwrap_err();
        assert!(err.to_string().contains("ThresholdGrid"), "{err}");
        let c = FunctionClass::finite_table(vec![vec![0.0]]).unwrap();
        assert!(c.evaluate(&Hypothesis::Index(0), &Point::Index(3)).is_err());
        assert!(c.evaluate(&Hypothesis::Index(2), &Point::Index(0)).is_err());
    }

    #[test]
    fn table_rejects_out_of_range_values() {
        assert!(FunctionClass::finite_table(vec![vec![1.5]]).is_err());
        assert!(FunctionClass::finite_table(vec![vec![0.0, 1.0], vec![0.0]]).is_err());
        assert!(FiniteTable::unbounded(vec![vec![2.5]]).is_ok());
    }

    #[test]
    fn grid_is_equally_spaced_inside_margin() {
        let g = ThresholdGrid::new(3, 0.0).unwrap();
        assert_eq!(
            [g.threshold(0), g.threshold(1), g.threshold(2)],
            [0.25, 0.5, 0.75]
        );
        let g = ThresholdGrid::new(9, 0.05).unwrap();
        for i in 0..9 {
            assert!(g.threshold(i) > 0.05 && g.threshold(i) < 0.95);
        }
        let gaps: Vec<f64> = (0..8)
            .map(|i| g.threshold(i + 1) - g.threshold(i))
            .collect();
        assert!(gaps.iter().all(|d| (d - 0.09).abs() < 1e-12));
    }

    #[test]
    fn count_at_or_below_matches_scan() {
        let g = ThresholdGrid::new(17, 0.01).unwrap();
        for k in 0..=200 {
            let z = -0.1 + 1.2 * k as f64 / 200.0;
            let zc = Coord::from_f64(z);
            let scan = (0..17).filter(|&i| g.threshold_coord(i) <= zc).count() as u64;
            assert_eq!(g.count_at_or_below(zc), scan, "z = {z}");
        }
        // exactly on a threshold
        let on = g.threshold_coord(5);
        assert_eq!(g.count_at_or_below(on), 6);
    }

    #[test]
    fn count_at_or_below_on_huge_grid() {
        let g = ThresholdGrid::new(100_000_000, 0.005).unwrap();
        let z = g.threshold_coord(12_345_678);
        assert_eq!(g.count_at_or_below(z), 12_345_679);
        let just_below = z.wrapping_sub(Coord::from_f64(1e-15));
        assert_eq!(g.count_at_or_below(just_below), 12_345_678);
    }

    #[test]
    fn simplex_membership() {
        let c = FunctionClass::simplex(3).unwrap();
        assert!(c.contains(&Hypothesis::Vector(vec![0.2, 0.3, 0.5])));
        assert!(!c.contains(&Hypothesis::Vector(vec![0.2, 0.3, 0.6])));
        assert!(!c.contains(&Hypothesis::Vector(vec![-0.1, 0.6, 0.5])));
    }
}
