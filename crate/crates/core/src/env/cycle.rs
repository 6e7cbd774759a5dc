use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{add, linf, sub, Point};

/// A closed lattice path `(z_0, z_1, …, z_n)` with `z_n = z_0` and
/// `z_0, …, z_{n-1}` pairwise distinct. Lengths 1 (a loop) and 2 (an edge
/// traversed back and forth) are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Cycle {
    points: Vec<Point>,
}

impl Cycle {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Model(format!(
                "a cycle needs at least two points (z_0 and the closing z_n), got {}",
                points.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Model("cycle points must have dimension ≥ 1".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Model("cycle points have mixed dimensions".into()));
        }
        if points.first() != points.last() {
            return Err(Error::Model(format!(
                "cycle is not closed: first {:?}, last {:?}",
                points.first().unwrap(),
                points.last().unwrap()
            )));
        }
        let n = points.len() - 1;
        for a in 0..n {
            for b in (a + 1)..n {
                if points[a] == points[b] {
                    return Err(Error::Model(format!(
                        "cycle visits {:?} twice (positions {a} and {b})",
                        points[a]
                    )));
                }
            }
        }
        Ok(Self { points })
    }

    /// Number of edges `n`.
    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// All `n + 1` points including the closing repetition.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// The distinct vertices `z_0, …, z_{n-1}`.
    pub fn vertices(&self) -> &[Point] {
        &self.points[..self.len()]
    }

    /// Directed edges `(z_{j-1}, z_j)`, `j = 1..=n`.
    pub fn edges(&self) -> impl Iterator<Item = (&Point, &Point)> {
        self.points.windows(2).map(|w| (&w[0], &w[1]))
    }

    /// Edge displacements `z_j - z_{j-1}`.
    pub fn steps(&self) -> Vec<Point> {
        self.edges().map(|(a, b)| sub(b, a)).collect()
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    pub fn translate(&self, x: &[i64]) -> Self {
        Self {
            points: self.points.iter().map(|p| add(p, x)).collect(),
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.vertices().iter().any(|p| p.as_slice() == x)
    }

    pub fn contains_edge(&self, x: &[i64], y: &[i64]) -> bool {
        self.edges().any(|(a, b)| a.as_slice() == x && b.as_slice() == y)
    }

    /// ℓ∞ diameter of the vertex set.
    pub fn diameter(&self) -> i64 {
        let v = self.vertices();
        let mut d = 0;
        for a in v {
            for b in v {
                d = d.max(linf(&sub(a, b)));
            }
        }
        d
    }
}

impl TryFrom<Vec<Point>> for Cycle {
    type Error = Error;
    fn try_from(points: Vec<Point>) -> Result<Self> {
        Cycle::new(points)
    }
}

impl From<Cycle> for Vec<Point> {
    fn from(c: Cycle) -> Self {
        c.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Cycle {
        Cycle::new(vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![0, 1], vec![0, 0]]).unwrap()
    }

    #[test]
    fn rejects_malformed() {
        assert!(Cycle::new(vec![vec![0, 0]]).is_err());
        assert!(Cycle::new(vec![vec![0, 0], vec![1, 0]]).is_err());
        assert!(Cycle::new(vec![vec![0, 0], vec![1, 0], vec![1, 0], vec![0, 0]]).is_err());
        assert!(Cycle::new(vec![vec![0, 0], vec![1], vec![0, 0]]).is_err());
    }

    #[test]
    fn short_cycles_allowed() {
        let loop1 = Cycle::new(vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert_eq!(loop1.len(), 1);
        assert_eq!(loop1.steps(), vec![vec![0, 0]]);
        let edge = Cycle::new(vec![vec![0, 0], vec![1, 0], vec![0, 0]]).unwrap();
        assert_eq!(edge.len(), 2);
        assert_eq!(edge.reversed(), edge);
    }

    #[test]
    fn steps_telescope() {
        let c = square();
        let total = c.steps().iter().fold(vec![0, 0], |acc, s| add(&acc, s));
        assert_eq!(total, vec![0, 0]);
        assert_eq!(c.diameter(), 1);
        assert!(c.contains(&[1, 1]));
        assert!(c.contains_edge(&[1, 0], &[1, 1]));
        assert!(!c.contains_edge(&[1, 1], &[1, 0]));
        assert!(c.translate(&[2, 3]).contains(&[3, 4]));
    }

    #[test]
    fn triangle_reversal() {
        let t = Cycle::new(vec![vec![0, 0], vec![1, 0], vec![1, 1], vec![0, 0]]).unwrap();
        let r = t.reversed();
        assert_eq!(r.points(), &[vec![0, 0], vec![1, 1], vec![1, 0], vec![0, 0]]);
        assert_eq!(r.reversed(), t);
    }
}
