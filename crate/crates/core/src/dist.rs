//! Sampleable distributions over domain points.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::coord::Coord;
use crate::domain::Point;
use crate::rng::SimRng;

type SampleFn = dyn Fn(&mut SimRng) -> Point + Send + Sync;

/// Distribution over domain points.
#[derive(Clone)]
pub enum PointDist {
    PointMass(Point),
    /// Uniform over indices `0..n`.
    UniformIndex(usize),
    /// Weighted indices (weights need not be normalized).
    Categorical(Vec<f64>),
    /// Finite law over arbitrary points (weights need not be normalized).
    Discrete(Vec<(Point, f64)>),
    /// Uniform scalar on `[lo, hi)`.
    UniformScalar {
        lo: f64,
        hi: f64,
    },
    /// Uniform on the Euclidean unit sphere in `d` dimensions.
    UniformSphere(usize),
    /// Uniform on the cube `[-1, 1]^d`.
    UniformCube(usize),
    /// Unlabeled draw from `x` paired with a Bernoulli(`p_one`) label in `{0, 1}`.
    Labeled {
        x: Box<PointDist>,
        p_one: f64,
    },
    Custom(Arc<SampleFn>),
}

impl PointDist {
    pub fn custom(f: impl Fn(&mut SimRng) -> Point + Send + Sync + 'static) -> Self {
        PointDist::Custom(Arc::new(f))
    }

    pub fn uniform_unit() -> Self {
        PointDist::UniformScalar { lo: 0.0, hi: 1.0 }
    }

    pub fn sample(&self, rng: &mut SimRng) -> Point {
        match self {
            PointDist::PointMass(p) => p.clone(),
            PointDist::UniformIndex(n) => Point::Index(rng.gen_range(0..*n)),
            PointDist::Categorical(w) => Point::Index(sample_categorical(w, rng)),
            PointDist::Discrete(items) => {
                let w: Vec<f64> = items.iter().map(|p| p.1).collect();
                items[sample_categorical(&w, rng)].0.clone()
            }
            PointDist::UniformScalar { lo, hi } => {
                let u: f64 = rng.gen();
                Point::Scalar(Coord::from_f64(lo + (hi - lo) * u))
            }
            PointDist::UniformSphere(d) => loop {
                let v: Vec<f64> = (0..*d)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-300 {
                    break Point::Vector(v.into_iter().map(|x| x / n).collect());
                }
            },
            PointDist::UniformCube(d) => {
                Point::Vector((0..*d).map(|_| rng.gen_range(-1.0..1.0)).collect())
            }
            PointDist::Labeled { x, p_one } => {
                let base = x.sample(rng);
                let y = if rng.gen::<f64>() < *p_one { 1.0 } else { 0.0 };
                Point::Labeled {
                    x: Box::new(base),
                    y,
                }
            }
            PointDist::Custom(f) => f(rng),
        }
    }

    /// Exact finite law, when the distribution has one.
    pub fn support(&self) -> Option<Vec<(Point, f64)>> {
        match self {
            PointDist::PointMass(p) => Some(vec![(p.clone(), 1.0)]),
            PointDist::UniformIndex(n) => Some(
                (0..*n)
                    .map(|i| (Point::Index(i), 1.0 / *n as f64))
                    .collect(),
            ),
            PointDist::Categorical(w) => {
                let total: f64 = w.iter().sum();
                Some(
                    w.iter()
                        .enumerate()
                        .map(|(i, wi)| (Point::Index(i), wi / total))
                        .collect(),
                )
            }
            PointDist::Discrete(items) => {
                let total: f64 = items.iter().map(|p| p.1).sum();
                Some(items.iter().map(|(p, w)| (p.clone(), w / total)).collect())
            }
            PointDist::Labeled { x, p_one } => {
                let base = x.support()?;
                let mut out = Vec::with_capacity(base.len() * 2);
                for (p, w) in base {
                    out.push((
                        Point::Labeled {
                            x: Box::new(p.clone()),
                            y: 0.0,
                        },
                        w * (1.0 - p_one),
                    ));
                    out.push((
                        Point::Labeled {
                            x: Box::new(p),
                            y: 1.0,
                        },
                        w * p_one,
                    ));
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Mean of a vector-valued law, when known in closed form.
    pub fn mean_vector(&self) -> Option<Vec<f64>> {
        match self {
            PointDist::UniformSphere(d) | PointDist::UniformCube(d) => Some(vec![0.0; *d]),
            PointDist::Custom(_) | PointDist::UniformScalar { .. } | PointDist::UniformIndex(_) => {
                None
            }
            PointDist::Labeled { .. } | PointDist::Categorical(_) => None,
            other => {
                let support = other.support()?;
                let d = support.first()?.0.as_vector()?.len();
                let mut m = vec![0.0; d];
                for (p, w) in &support {
                    let v = p.as_vector()?;
                    for (mi, vi) in m.iter_mut().zip(v) {
                        *mi += w * vi;
                    }
                }
                Some(m)
            }
        }
    }
}

impl fmt::Debug for PointDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointDist::PointMass(p) => write!(f, "PointMass({p})"),
            PointDist::UniformIndex(n) => write!(f, "UniformIndex({n})"),
            PointDist::Categorical(w) => write!(f, "Categorical({w:?})"),
            PointDist::Discrete(items) => write!(f, "Discrete({} atoms)", items.len()),
            PointDist::UniformScalar { lo, hi } => write!(f, "UniformScalar[{lo}, {hi})"),
            PointDist::UniformSphere(d) => write!(f, "UniformSphere({d})"),
            PointDist::UniformCube(d) => write!(f, "UniformCube({d})"),
            PointDist::Labeled { x, p_one } => write!(f, "Labeled({x:?}, p_one={p_one})"),
            PointDist::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Inverse-CDF draw from unnormalized weights.
pub fn sample_categorical(weights: &[f64], rng: &mut SimRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // rounding: last index with positive weight
    weights
        .iter()
        .rposition(|w| *w > 0.0)
        .unwrap_or(weights.len() - 1)
}
