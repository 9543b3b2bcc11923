//! `sup_f sum_t w_t (f(x_t) - c_t(f))` for every class with a tractable
//! supremum.

use rand::Rng;

use crate::dist::PointDist;
use crate::domain::{ball_norm, BallNorm, FunctionClass, Hypothesis, Point};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Grids up to this size are enumerated when centering needs per-hypothesis means.
pub(crate) const ENUMERABLE_GRID: u64 = 1 << 16;

/// Conditional mean `E_{t-1} f(x_t)` of one round.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Center {
    /// One entry per hypothesis of a finite class.
    PerHypothesis(Vec<f64>),
    /// Mean point of a linear game.
    Vector(Vec<f64>),
}

/// Number of hypotheses of a finite class that can be enumerated.
fn enumerable(class: &FunctionClass) -> Option<usize> {
    match class {
        FunctionClass::FiniteTable(t) => Some(t.len()),
        FunctionClass::ThresholdGrid(g) if g.resolution() <= ENUMERABLE_GRID => {
            Some(g.resolution() as usize)
        }
        _ => None,
    }
}

pub(crate) fn check_supported(class: &FunctionClass) -> Result<()> {
    match class {
        FunctionClass::FiniteTable(_)
        | FunctionClass::ThresholdGrid(_)
        | FunctionClass::LinearBall { .. }
        | FunctionClass::Simplex { .. } => Ok(()),
        other => Err(Error::InvalidParameter(format!(
            "supremum over {} is not implemented; use a finite class or a linear ball",
            other.variant_name()
        ))),
    }
}

/// Exact center under a finite law, or the average over `inner_mc` draws.
pub(crate) fn center_of(
    class: &FunctionClass,
    dist: &PointDist,
    inner_mc: Option<usize>,
    rng: &mut SimRng,
) -> Result<Center> {
    if let Some(n) = enumerable(class) {
        let mut c = vec![0.0; n];
        let mut add = |x: &Point, w: f64| -> Result<()> {
            for (i, ci) in c.iter_mut().enumerate() {
                *ci += w * class.evaluate(&Hypothesis::Index(i), x)?;
            }
            Ok(())
        };
        if let Some(support) = dist.support() {
            for (x, w) in &support {
                add(x, *w)?;
            }
        } else {
            let m = inner_mc.ok_or(Error::MissingMeanOracle)?;
            for _ in 0..m {
                let x = dist.sample(rng);
                add(&x, 1.0 / m as f64)?;
            }
        }
        return Ok(Center::PerHypothesis(c));
    }
    let d = class.dimension().ok_or_else(|| {
        Error::InvalidParameter(format!("cannot center {}", class.variant_name()))
    })?;
    if let Some(m) = dist.mean_vector() {
        return Ok(Center::Vector(m));
    }
    let n = inner_mc.ok_or(Error::MissingMeanOracle)?;
    let mut m = vec![0.0; d];
    for _ in 0..n {
        let x = dist.sample(rng);
        let v = x.as_vector().ok_or_else(|| Error::DomainMismatch {
            class: class.variant_name(),
            point: x.variant_name().to_string(),
        })?;
        for (mi, vi) in m.iter_mut().zip(v) {
            *mi += vi / n as f64;
        }
    }
    Ok(Center::Vector(m))
}

/// `sup_f sum_t w_t (f(x_t) - c_t(f))`, with `c = 0` when `centers` is `None`.
pub(crate) fn weighted_sup(
    class: &FunctionClass,
    xs: &[&Point],
    w: &[f64],
    centers: Option<&[Center]>,
) -> Result<f64> {
    debug_assert_eq!(xs.len(), w.len());
    match class {
        FunctionClass::FiniteTable(table) => {
            let mut cols = Vec::with_capacity(xs.len());
            for x in xs {
                match x {
                    Point::Index(j) if *j < table.domain_size() => cols.push(*j),
                    other => {
                        return Err(Error::DomainMismatch {
                            class: "FiniteTable",
                            point: other.to_string(),
                        })
                    }
                }
            }
            let mut best = f64::NEG_INFINITY;
            for (i, row) in table.rows().iter().enumerate() {
                let mut s = 0.0;
                for t in 0..cols.len() {
                    let c = center_entry(centers, t, i)?;
                    s += w[t] * (row[cols[t]] - c);
                }
                best = best.max(s);
            }
            Ok(best)
        }
        FunctionClass::ThresholdGrid(grid) => {
            if centers.is_some() {
                let n = enumerable(class).ok_or_else(|| {
                    Error::InvalidParameter(
                        "centered supremum needs an enumerable threshold grid".into(),
                    )
                })?;
                let mut best = f64::NEG_INFINITY;
                for i in 0..n {
                    let h = Hypothesis::Index(i);
                    let mut s = 0.0;
                    for t in 0..xs.len() {
                        s += w[t] * (class.evaluate(&h, xs[t])? - center_entry(centers, t, i)?);
                    }
                    best = best.max(s);
                }
                return Ok(best);
            }
            // hypotheses i >= k_t predict 1 at x_t; sweep the breakpoints
            let mut events = Vec::with_capacity(xs.len());
            for (x, wt) in xs.iter().zip(w) {
                let (z, c0, c1) = threshold_costs(x)?;
                events.push((grid.count_at_or_below(z), wt * c0, wt * c1));
            }
            events.sort_by_key(|a| a.0);
            let mut s: f64 = events.iter().map(|e| e.1).sum();
            let mut k = 0;
            while k < events.len() && events[k].0 == 0 {
                s += events[k].2 - events[k].1;
                k += 1;
            }
            let mut best = s;
            while k < events.len() {
                let at = events[k].0;
                while k < events.len() && events[k].0 == at {
                    s += events[k].2 - events[k].1;
                    k += 1;
                }
                if at < grid.resolution() {
                    best = best.max(s);
                }
            }
            Ok(best)
        }
        FunctionClass::LinearBall {
            dimension,
            radius,
            norm,
        } => {
            let s = centered_vector_sum(*dimension, xs, w, centers)?;
            // sup over the ball of <f, s> is R times the dual norm
            let dual = match norm {
                BallNorm::Euclidean => ball_norm(BallNorm::Euclidean, &s),
                BallNorm::SupDual => s.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            };
            Ok(radius * dual)
        }
        FunctionClass::Simplex { dimension } => {
            let s = centered_vector_sum(*dimension, xs, w, centers)?;
            Ok(s.into_iter().fold(f64::NEG_INFINITY, f64::max))
        }
        other => check_supported(other).map(|_| unreachable!()),
    }
}

fn center_entry(centers: Option<&[Center]>, t: usize, i: usize) -> Result<f64> {
    match centers {
        None => Ok(0.0),
        Some(c) => match &c[t] {
            Center::PerHypothesis(v) => Ok(v[i]),
            Center::Vector(_) => Err(Error::InvalidParameter(
                "vector center for a finite class".into(),
            )),
        },
    }
}

fn centered_vector_sum(
    dimension: usize,
    xs: &[&Point],
    w: &[f64],
    centers: Option<&[Center]>,
) -> Result<Vec<f64>> {
    let mut s = vec![0.0; dimension];
    for (t, x) in xs.iter().enumerate() {
        let v = match x {
            Point::Vector(v) if v.len() == dimension => v,
            other => {
                return Err(Error::DomainMismatch {
                    class: "LinearBall/Simplex",
                    point: other.to_string(),
                })
            }
        };
        let c = match centers.map(|c| &c[t]) {
            None => None,
            Some(Center::Vector(m)) => Some(m),
            Some(Center::PerHypothesis(_)) => {
                return Err(Error::InvalidParameter(
                    "per-hypothesis center for a linear class".into(),
                ))
            }
        };
        for k in 0..dimension {
            s[k] += w[t] * (v[k] - c.map_or(0.0, |m| m[k]));
        }
    }
    Ok(s)
}

/// `(z, value when predicting 0, value when predicting 1)`.
fn threshold_costs(x: &Point) -> Result<(crate::coord::Coord, f64, f64)> {
    let (base, label) = x.split_label();
    let z = match base {
        Point::Scalar(z) => *z,
        other => {
            return Err(Error::DomainMismatch {
                class: "ThresholdGrid",
                point: other.to_string(),
            })
        }
    };
    Ok(match label {
        Some(y) => (z, y.abs(), (1.0 - y).abs()),
        None => (z, 0.0, 1.0),
    })
}

/// Uniform random signs.
pub(crate) fn random_signs(n: usize, rng: &mut SimRng) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Signs of the path with bits `bits` (`eps_1` most significant).
pub(crate) fn signs_from_bits(bits: u64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| {
            if bits >> (n - 1 - t) & 1 == 1 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ThresholdGrid;

    #[test]
    fn grid_sweep_matches_enumeration() {
        use rand::SeedableRng;
        let mut rng = SimRng::seed_from_u64(4);
        for n in [1u64, 3, 16] {
            let grid = ThresholdGrid::new(n, 0.0).unwrap();
            let class = FunctionClass::ThresholdGrid(grid);
            for _ in 0..50 {
                let pts: Vec<Point> = (0..7)
                    .map(|_| {
                        let z: f64 = rng.gen();
                        if rng.gen::<bool>() {
                            Point::pair(z, f64::from(rng.gen::<bool>() as u8))
                        } else {
                            Point::scalar(z)
                        }
                    })
                    .collect();
                let refs: Vec<&Point> = pts.iter().collect();
                let w = random_signs(7, &mut rng);
                let fast = weighted_sup(&class, &refs, &w, None).unwrap();
                let brute = (0..n as usize)
                    .map(|i| {
                        (0..7)
                            .map(|t| w[t] * class.evaluate(&Hypothesis::Index(i), &pts[t]).unwrap())
                            .sum::<f64>()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((fast - brute).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_sup_is_dual_norm() {
        let class = FunctionClass::linear_ball(2, 2.0, BallNorm::Euclidean).unwrap();
        let a = Point::Vector(vec![3.0, 0.0]);
        let b = Point::Vector(vec![0.0, 4.0]);
        let v = weighted_sup(&class, &[&a, &b], &[1.0, -1.0], None).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
        let class = FunctionClass::linear_ball(2, 1.0, BallNorm::SupDual).unwrap();
        let v = weighted_sup(&class, &[&a, &b], &[1.0, -1.0], None).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }
}
