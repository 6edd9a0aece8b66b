//! Exact rational coordinates.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = Ratio<i64>;

/// Round half up: `floor(r + 1/2)`.
pub fn round_half_up(r: Rational) -> i64 {
    (r + Rational::new(1, 2)).floor().to_integer()
}

pub fn to_f64(r: Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A (row, col) position in pixel coordinates. Rows grow downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub row: Rational,
    pub col: Rational,
}

impl Point {
    pub fn new(row: Rational, col: Rational) -> Self {
        Point { row, col }
    }

    pub fn from_ints(row: i64, col: i64) -> Self {
        Point::new(Rational::from_integer(row), Rational::from_integer(col))
    }

    pub fn zero() -> Self {
        Point::new(Rational::zero(), Rational::zero())
    }

    /// Integer position nearest to this point, halves rounded up per axis.
    pub fn round_half_up(self) -> (i64, i64) {
        (round_half_up(self.row), round_half_up(self.col))
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(self, other: Point, t: Rational) -> Point {
        let one = Rational::from_integer(1);
        Point::new(
            (one - t) * self.row + t * other.row,
            (one - t) * self.col + t * other.col,
        )
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.row + o.row, self.col + o.col)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.row - o.row, self.col - o.col)
    }
}

impl Mul<Rational> for Point {
    type Output = Point;
    fn mul(self, k: Rational) -> Point {
        Point::new(self.row * k, self.col * k)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Serde helper storing a [`Rational`] as an `"n/d"` (or `"n"`) string.
pub mod serde_ratio {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<Rational>().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        (self.row.to_string(), self.col.to_string()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Point, D::Error> {
        let (r, c) = <(String, String)>::deserialize(d)?;
        let row = r.parse::<Rational>().map_err(serde::de::Error::custom)?;
        let col = c.parse::<Rational>().map_err(serde::de::Error::custom)?;
        Ok(Point::new(row, col))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_goes_up_on_halves() {
        assert_eq!(round_half_up(Rational::new(5, 2)), 3);
        assert_eq!(round_half_up(Rational::new(-5, 2)), -2);
        assert_eq!(round_half_up(Rational::new(7, 3)), 2);
        assert_eq!(round_half_up(Rational::new(8, 3)), 3);
    }

    #[test]
    fn point_json_uses_fraction_strings() {
        let p = Point::new(Rational::new(1, 2), Rational::from_integer(3));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"["1/2","3"]"#);
        let q: Point = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
