use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coord::Coord;

/// A move of the adversary: an element of some class's domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    /// Index into a finite domain (columns of a [`FiniteTable`](super::FiniteTable)).
    Index(usize),
    /// Fixed-dimension real vector (linear games).
    Vector(Vec<f64>),
    /// Scalar position `z` for threshold predictors.
    Scalar(Coord),
    /// Supervised pair `(x, y)`; evaluating a class on it yields `|f(x) - y|`.
    Labeled { x: Box<Point>, y: f64 },
}

impl Point {
    /// Threshold-game move `(z, y)`.
    pub fn pair(z: impl Into<Coord>, y: f64) -> Point {
        Point::Labeled {
            x: Box::new(Point::Scalar(z.into())),
            y,
        }
    }

    pub fn scalar(z: f64) -> Point {
        Point::Scalar(Coord::from_f64(z))
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Point::Index(_) => "index point",
            Point::Vector(_) => "vector point",
            Point::Scalar(_) => "scalar point",
            Point::Labeled { .. } => "labeled point",
        }
    }

    /// Unlabeled part and label, if any.
    pub fn split_label(&self) -> (&Point, Option<f64>) {
        match self {
            Point::Labeled { x, y } => (x, Some(*y)),
            other => (other, None),
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Point::Vector(v) => Some(v),
            _ => None,
        }
    }

    /// Position `z` of a scalar or labeled-scalar point.
    pub fn threshold_z(&self) -> Option<Coord> {
        match self.split_label().0 {
            Point::Scalar(z) => Some(*z),
            _ => None,
        }
    }

    /// Real-valued summary for statistics and dumps: the index, the scalar,
    /// or the first vector coordinate.
    pub fn primary_value(&self) -> f64 {
        match self.split_label().0 {
            Point::Index(i) => *i as f64,
            Point::Scalar(z) => z.to_f64(),
            Point::Vector(v) => v.first().copied().unwrap_or(0.0),
            Point::Labeled { .. } => unreachable!("nested labels"),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Index(i) => write!(f, "#{i}"),
            Point::Vector(v) => {
                write!(f, "(")?;
                for (k, x) in v.iter().enumerate() {
                    if k > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Point::Scalar(z) => write!(f, "{z}"),
            Point::Labeled { x, y } => write!(f, "{x}|{y}"),
        }
    }
}

/// An element of a function class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// Row of a finite table or index into a threshold grid.
    Index(usize),
    /// Point of a ball or simplex.
    Vector(Vec<f64>),
    /// Threshold of the continuous threshold class.
    Threshold(#[serde(with = "coord_as_f64")] Coord),
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Index(i) => write!(f, "f#{i}"),
            Hypothesis::Vector(v) => write!(f, "{}", Point::Vector(v.clone())),
            Hypothesis::Threshold(t) => write!(f, "theta={t}"),
        }
    }
}

mod coord_as_f64 {
    use super::Coord;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Coord, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(c.to_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Coord, D::Error> {
        let x = f64::deserialize(d)?;
        if !x.is_finite() || x.abs() >= 8.0 {
            return Err(serde::de::Error::custom("threshold outside [-8, 8)"));
        }
        Ok(Coord::from_f64(x))
    }
}
