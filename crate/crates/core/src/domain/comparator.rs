//! Best fixed hypothesis in hindsight.

use super::class::{dot, l2_norm, BallNorm, FunctionClass, ThresholdGrid};
use super::point::{Hypothesis, Point};
use crate::coord::Coord;
use crate::error::{Error, Result};
use crate::stats::pairwise_sum;

/// Minimizer of the cumulative loss `sum_t f(x_t)` over the class, with its
/// total loss.
///
/// Ties go to the lowest row / grid index / smallest threshold. For a
/// linear ball with `sum_t x_t = 0` the zero vector is returned.
pub fn best_fixed_comparator(
    class: &FunctionClass,
    sequence: &[Point],
) -> Result<(Hypothesis, f64)> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    let best = match class {
        FunctionClass::FiniteTable(table) => {
            let mut best: Option<(usize, f64)> = None;
            for i in 0..table.len() {
                let h = Hypothesis::Index(i);
                let loss = total_loss(class, &h, sequence)?;
                if best.is_none_or(|(_, b)| loss < b) {
                    best = Some((i, loss));
                }
            }
            Hypothesis::Index(best.expect("table is nonempty").0)
        }
        FunctionClass::ThresholdGrid(grid) => {
            Hypothesis::Index(best_grid_index(grid, sequence)? as usize)
        }
        FunctionClass::ThresholdInterval { margin } => {
            Hypothesis::Threshold(best_interval_threshold(*margin, sequence)?)
        }
        FunctionClass::LinearBall {
            dimension,
            radius,
            norm,
        } => {
            let s = vector_sum(*dimension, sequence)?;
            Hypothesis::Vector(ball_minimizer(*radius, *norm, &s))
        }
        FunctionClass::Simplex { dimension } => {
            let s = vector_sum(*dimension, sequence)?;
            let mut j = 0;
            for k in 1..s.len() {
                if s[k] < s[j] {
                    j = k;
                }
            }
            let mut e = vec![0.0; *dimension];
            e[j] = 1.0;
            Hypothesis::Vector(e)
        }
    };
    let loss = total_loss(class, &best, sequence)?;
    Ok((best, loss))
}

/// `sum_t f(x_t)` by pairwise summation.
pub fn total_loss(class: &FunctionClass, h: &Hypothesis, sequence: &[Point]) -> Result<f64> {
    let losses = sequence
        .iter()
        .map(|x| class.evaluate(h, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&losses))
}

/// `argmin_{|f| <= R} <f, s>`.
pub fn ball_minimizer(radius: f64, norm: BallNorm, s: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; s.len()];
    match norm {
        BallNorm::Euclidean => {
            let n = l2_norm(s);
            if n > 0.0 {
                for (fi, si) in f.iter_mut().zip(s) {
                    *fi = -radius * si / n;
                }
            }
        }
        BallNorm::SupDual => {
            let mut j = 0;
            for k in 1..s.len() {
                if s[k].abs() > s[j].abs() {
                    j = k;
                }
            }
            if s[j] != 0.0 {
                f[j] = -radius * s[j].signum();
            }
        }
    }
    f
}

fn vector_sum(dimension: usize, sequence: &[Point]) -> Result<Vec<f64>> {
    let mut s = vec![0.0; dimension];
    for x in sequence {
        match x {
            Point::Vector(v) if v.len() == dimension => {
                for (acc, vi) in s.iter_mut().zip(v) {
                    *acc += vi;
                }
            }
            Point::Labeled { .. } => {
                return Err(Error::InvalidParameter(
                    "linear-class comparator is only defined for the linear loss".into(),
                ))
            }
            other => {
                return Err(Error::DomainMismatch {
                    class: "LinearBall/Simplex",
                    point: format!("{} of wrong shape", other.variant_name()),
                })
            }
        }
    }
    Ok(s)
}

/// Per-point contribution `(loss if predicting 0, loss if predicting 1)`.
fn threshold_costs(x: &Point) -> Result<(Coord, f64, f64)> {
    let (base, label) = x.split_label();
    let z = match base {
        Point::Scalar(z) => *z,
        other => {
            return Err(Error::DomainMismatch {
                class: "threshold class",
                point: other.variant_name().to_string(),
            })
        }
    };
    Ok(match label {
        Some(y) => (z, y.abs(), (1.0 - y).abs()),
        None => (z, 0.0, 1.0),
    })
}

/// Grid index minimizing cumulative threshold loss, by a sweep over the
/// breakpoints `k_t = #{theta_i <= z_t}`; experts `i >= k_t` predict 1.
fn best_grid_index(grid: &ThresholdGrid, sequence: &[Point]) -> Result<u64> {
    let mut events: Vec<(u64, f64, f64)> = Vec::with_capacity(sequence.len());
    for x in sequence {
        let (z, c0, c1) = threshold_costs(x)?;
        events.push((grid.count_at_or_below(z), c0, c1));
    }
    // L(i) = sum_{t: i < k_t} c0_t + sum_{t: i >= k_t} c1_t
    events.sort_by_key(|a| a.0);
    let mut loss: f64 = events.iter().map(|e| e.1).sum();
    let mut k = 0;
    while k < events.len() && events[k].0 == 0 {
        loss += events[k].2 - events[k].1;
        k += 1;
    }
    let mut best = (0u64, loss);
    while k < events.len() {
        let at = events[k].0;
        while k < events.len() && events[k].0 == at {
            loss += events[k].2 - events[k].1;
            k += 1;
        }
        if at < grid.resolution() && loss < best.1 - 1e-12 {
            best = (at, loss);
        }
    }
    Ok(best.0)
}

/// Smallest threshold in `[margin, 1 - margin]` minimizing cumulative loss.
/// Candidates are the interval ends and the in-range points themselves: loss
/// is constant on every `(z_(k), z_(k+1)]`.
fn best_interval_threshold(margin: f64, sequence: &[Point]) -> Result<Coord> {
    let lo = Coord::from_f64(margin);
    let hi = Coord::from_f64(1.0 - margin);
    let mut pts = Vec::with_capacity(sequence.len());
    for x in sequence {
        pts.push(threshold_costs(x)?);
    }
    pts.sort_by_key(|a| a.0);
    let mut candidates: Vec<Coord> = vec![lo];
    candidates.extend(pts.iter().map(|p| p.0).filter(|z| *z > lo && *z <= hi));
    candidates.push(hi);
    candidates.dedup();
    // loss(theta) = sum_{z < theta} c1 + sum_{z >= theta} c0
    let mut loss: f64 = pts.iter().map(|p| p.1).sum();
    let mut idx = 0;
    let mut best: Option<(Coord, f64)> = None;
    for theta in candidates {
        while idx < pts.len() && pts[idx].0 < theta {
            loss += pts[idx].2 - pts[idx].1;
            idx += 1;
        }
        if best.is_none_or(|(_, b)| loss < b - 1e-12) {
            best = Some((theta, loss));
        }
    }
    Ok(best.expect("at least one candidate").0)
}

/// Linear loss of a vector hypothesis over a vector sequence.
pub fn linear_total(f: &[f64], sequence: &[Vec<f64>]) -> f64 {
    let v: Vec<f64> = sequence.iter().map(|x| dot(f, x)).collect();
    pairwise_sum(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::class::FunctionClass as FC;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn enumerate_best(class: &FC, seq: &[Point]) -> (usize, f64) {
        let n = class.cardinality().unwrap() as usize;
        let mut best = (0, f64::INFINITY);
        for i in 0..n {
            let l = total_loss(class, &Hypothesis::Index(i), seq).unwrap();
            if l < best.1 {
                best = (i, l);
            }
        }
        best
    }

    #[test]
    fn ball_example() {
        let c = FC::linear_ball(2, 1.0, BallNorm::Euclidean).unwrap();
        let seq = vec![Point::Vector(vec![1.0, 0.0]), Point::Vector(vec![1.0, 0.0])];
        let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
        assert_eq!(h, Hypothesis::Vector(vec![-1.0, 0.0]));
        assert_eq!(loss, -2.0);
    }

    #[test]
    fn ball_zero_sum_returns_zero_vector() {
        let c = FC::linear_ball(2, 1.0, BallNorm::Euclidean).unwrap();
        let seq = vec![
            Point::Vector(vec![1.0, 0.5]),
            Point::Vector(vec![-1.0, -0.5]),
        ];
        let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
        assert_eq!(h, Hypothesis::Vector(vec![0.0, 0.0]));
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn threshold_example_breaks_ties_to_smallest_theta() {
        let c = FC::threshold_grid(3, 0.0).unwrap();
        let seq = vec![Point::pair(0.1, 1.0), Point::pair(0.9, 0.0)];
        let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
        assert_eq!(h, Hypothesis::Index(0));
        assert_eq!(loss, 0.0);
        if let FC::ThresholdGrid(g) = &c {
            assert_eq!(g.threshold(0), 0.25);
        }
    }

    #[test]
    fn singleton_table() {
        let c = FC::finite_table(vec![vec![0.5, -0.25, 1.0]]).unwrap();
        let seq = vec![
            Point::Index(0),
            Point::Index(1),
            Point::Index(2),
            Point::Index(0),
        ];
        let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
        assert_eq!(h, Hypothesis::Index(0));
        assert_eq!(loss, 1.75);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let c = FC::simplex(3).unwrap();
        assert_eq!(
            best_fixed_comparator(&c, &[]).unwrap_err(),
            Error::EmptySequence
        );
    }

    #[test]
    fn simplex_picks_lowest_coordinate_vertex() {
        let c = FC::simplex(3).unwrap();
        let seq = vec![
            Point::Vector(vec![0.5, -0.2, -0.2]),
            Point::Vector(vec![0.0, 0.1, 0.1]),
        ];
        let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
        assert_eq!(h, Hypothesis::Vector(vec![0.0, 1.0, 0.0]));
        assert!((loss + 0.1).abs() < 1e-15);
    }

    #[test]
    fn sup_dual_ball_uses_largest_coordinate() {
        let c = FC::linear_ball(3, 2.0, BallNorm::SupDual).unwrap();
        let seq = vec![Point::Vector(vec![0.1, -0.9, 0.3])];
        let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
        assert_eq!(h, Hypothesis::Vector(vec![0.0, 2.0, 0.0]));
        assert!((loss + 1.8).abs() < 1e-15);
    }

    #[test]
    fn interval_finds_consistent_threshold() {
        let c = FC::threshold_interval(0.0).unwrap();
        // labels consistent with any theta in (0.3, 0.6]
        let seq = vec![
            Point::pair(0.3, 1.0),
            Point::pair(0.6, 0.0),
            Point::pair(0.1, 1.0),
        ];
        let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(h, Hypothesis::Threshold(Coord::from_f64(0.6)));
    }

    #[test]
    fn grid_sweep_matches_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [1u64, 2, 5, 16, 33] {
            let c = FC::threshold_grid(n, 0.05).unwrap();
            for _ in 0..50 {
                let len = rng.gen_range(1..30);
                let seq: Vec<Point> = (0..len)
                    .map(|_| {
                        let z: f64 = rng.gen_range(-0.05..1.05);
                        if rng.gen_bool(0.2) {
                            Point::scalar(z)
                        } else {
                            Point::pair(z, if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
                        }
                    })
                    .collect();
                let (h, loss) = best_fixed_comparator(&c, &seq).unwrap();
                let (bi, bl) = enumerate_best(&c, &seq);
                assert_eq!(h, Hypothesis::Index(bi));
                assert_eq!(loss, bl);
            }
        }
    }

    #[test]
    fn interval_is_no_worse_than_any_grid() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let interval = FC::threshold_interval(0.0).unwrap();
        let grid = FC::threshold_grid(200, 0.0).unwrap();
        for _ in 0..100 {
            let seq: Vec<Point> = (0..20)
                .map(|_| Point::pair(rng.gen::<f64>(), if rng.gen_bool(0.5) { 1.0 } else { 0.0 }))
                .collect();
            let (_, li) = best_fixed_comparator(&interval, &seq).unwrap();
            let (_, lg) = best_fixed_comparator(&grid, &seq).unwrap();
            assert!(li <= lg);
        }
    }

    fn arb_class_and_seq() -> impl Strategy<Value = (FC, Vec<Point>, u64)> {
        let table = (1usize..6, 1usize..5).prop_flat_map(|(nf, nx)| {
            (
                proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, nx), nf),
                proptest::collection::vec(0..nx, 1..12),
            )
                .prop_map(|(rows, idx)| {
                    (
                        FC::finite_table(rows).unwrap(),
                        idx.into_iter().map(Point::Index).collect::<Vec<_>>(),
                    )
                })
        });
        let ball = (1usize..4, 0.0f64..3.0).prop_flat_map(|(d, r)| {
            proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d), 1..10).prop_map(
                move |xs| {
                    (
                        FC::linear_ball(d, r, BallNorm::Euclidean).unwrap(),
                        xs.into_iter().map(Point::Vector).collect::<Vec<_>>(),
                    )
                },
            )
        });
        let simplex = (1usize..5).prop_flat_map(|d| {
            proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, d), 1..10).prop_map(
                move |xs| {
                    (
                        FC::simplex(d).unwrap(),
                        xs.into_iter().map(Point::Vector).collect::<Vec<_>>(),
                    )
                },
            )
        });
        let grid = (1u64..40).prop_flat_map(|n| {
            proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 1..15).prop_map(
                move |xs| {
                    (
                        FC::threshold_grid(n, 0.0).unwrap(),
                        xs.into_iter()
                            .map(|(z, y)| Point::pair(z, if y { 1.0 } else { 0.0 }))
                            .collect::<Vec<_>>(),
                    )
                },
            )
        });
        (prop_oneof![table, ball, simplex, grid], any::<u64>())
            .prop_map(|((c, s), seed)| (c, s, seed))
    }

    fn random_member(class: &FC, rng: &mut rand_chacha::ChaCha8Rng) -> Hypothesis {
        match class {
            FC::FiniteTable(t) => Hypothesis::Index(rng.gen_range(0..t.len())),
            FC::ThresholdGrid(g) => Hypothesis::Index(rng.gen_range(0..g.resolution()) as usize),
            FC::LinearBall {
                dimension, radius, ..
            } => {
                let v: Vec<f64> = (0..*dimension).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = l2_norm(&v).max(1.0);
                Hypothesis::Vector(
                    v.iter()
                        .map(|x| x / n * radius * rng.gen::<f64>())
                        .collect(),
                )
            }
            FC::Simplex { dimension } => {
                let v: Vec<f64> = (0..*dimension).map(|_| rng.gen::<f64>() + 1e-9).collect();
                let s: f64 = v.iter().sum();
                Hypothesis::Vector(v.iter().map(|x| x / s).collect())
            }
            FC::ThresholdInterval { .. } => Hypothesis::Threshold(Coord::from_f64(rng.gen())),
        }
    }

    proptest! {
        #[test]
        fn comparator_dominates_random_hypotheses((class, seq, seed) in arb_class_and_seq()) {
            let (_, best) = best_fixed_comparator(&class, &seq).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let h = random_member(&class, &mut rng);
                let l = total_loss(&class, &h, &seq).unwrap();
                prop_assert!(best <= l + 1e-9, "best {best} > random {l}");
            }
        }

        #[test]
        fn absolute_loss_in_unit_interval(z in 0.0f64..1.0, y in proptest::bool::ANY, i in 0usize..8) {
            let c = FC::threshold_grid(8, 0.0).unwrap();
            let v = c.evaluate(&Hypothesis::Index(i), &Point::pair(z, if y { 1.0 } else { 0.0 })).unwrap();
            prop_assert!(v == 0.0 || v == 1.0);
        }
    }
}
