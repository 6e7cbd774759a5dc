//! Integer lattice points and the periodized torus `(Z / L Z)^d`.

use serde::{Deserialize, Serialize};

/// A point (or displacement) of `Z^d`.
pub type Point = Vec<i64>;

pub fn linf(p: &[i64]) -> i64 {
    p.iter().map(|c| c.abs()).max().unwrap_or(0)
}

pub fn norm2_sq(p: &[i64]) -> i64 {
    p.iter().map(|c| c * c).sum()
}

pub fn sub(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[i64], b: &[i64]) -> Point {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn neg(a: &[i64]) -> Point {
    a.iter().map(|x| -x).collect()
}

/// The unit vectors `±e_1, …, ±e_d`, ordered `+e_1, -e_1, +e_2, …`.
pub fn unit_vectors(dim: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(2 * dim);
    for k in 0..dim {
        for s in [1, -1] {
            let mut e = vec![0; dim];
            e[k] = s;
            out.push(e);
        }
    }
    out
}

/// Torus of side `side` in `dim` dimensions. Sites are indexed
/// lexicographically with the first coordinate varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Torus {
    pub dim: usize,
    pub side: usize,
}

impl Torus {
    pub fn new(dim: usize, side: usize) -> Self {
        Self { dim, side }
    }

    pub fn num_sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Index of the site containing the (unwrapped) lattice point `p`.
    #[inline]
    pub fn index(&self, p: &[i64]) -> usize {
        let l = self.side as i64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in p {
            idx += c.rem_euclid(l) as usize * stride;
            stride *= self.side;
        }
        idx
    }

    /// Canonical coordinates in `[0, side)^d`.
    pub fn coords(&self, mut idx: usize) -> Point {
        let mut out = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            out.push((idx % self.side) as i64);
            idx /= self.side;
        }
        out
    }

    /// Site reached from `site` by the displacement `z`.
    #[inline]
    pub fn shift(&self, site: usize, z: &[i64]) -> usize {
        let l = self.side as i64;
        let mut rest = site;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &c in z {
            let x = (rest % self.side) as i64;
            rest /= self.side;
            idx += (x + c).rem_euclid(l) as usize * stride;
            stride *= self.side;
        }
        idx
    }

    /// Minimal-image displacement from site `a` to site `b`, each coordinate
    /// in `(-side/2, side/2]`.
    pub fn delta(&self, a: usize, b: usize) -> Point {
        let l = self.side as i64;
        let (ca, cb) = (self.coords(a), self.coords(b));
        ca.iter()
            .zip(&cb)
            .map(|(x, y)| {
                let mut d = (y - x).rem_euclid(l);
                if d > l / 2 {
                    d -= l;
                }
                d
            })
            .collect()
    }

    pub fn dist_linf(&self, a: usize, b: usize) -> i64 {
        linf(&self.delta(a, b))
    }

    pub fn dist2_sq(&self, a: usize, b: usize) -> i64 {
        norm2_sq(&self.delta(a, b))
    }

    /// Reduce a displacement to its minimal image.
    pub fn wrap_delta(&self, z: &[i64]) -> Point {
        let l = self.side as i64;
        z.iter()
            .map(|c| {
                let mut d = c.rem_euclid(l);
                if d > l / 2 {
                    d -= l;
                }
                d
            })
            .collect()
    }
}

/// Every integer vector with `‖v‖∞ ≤ r`, in lexicographic order.
pub fn box_points(dim: usize, r: i64) -> Vec<Point> {
    let w = (2 * r + 1) as usize;
    let total = w.pow(dim as u32);
    (0..total)
        .map(|mut k| {
            (0..dim)
                .map(|_| {
                    let c = (k % w) as i64 - r;
                    k /= w;
                    c
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_wrap() {
        let t = Torus::new(2, 8);
        for i in 0..t.num_sites() {
            assert_eq!(t.index(&t.coords(i)), i);
        }
        assert_eq!(t.index(&[-1, 0]), t.index(&[7, 0]));
        assert_eq!(t.shift(t.index(&[7, 7]), &[1, 1]), 0);
    }

    #[test]
    fn minimal_image() {
        let t = Torus::new(2, 8);
        let a = t.index(&[0, 0]);
        let b = t.index(&[7, 5]);
        assert_eq!(t.delta(a, b), vec![-1, -3]);
        assert_eq!(t.dist_linf(a, b), 3);
        assert_eq!(t.dist2_sq(a, b), 10);
    }

    #[test]
    fn box_enumeration() {
        let pts = box_points(2, 1);
        assert_eq!(pts.len(), 9);
        assert!(pts.contains(&vec![-1, 1]));
        assert_eq!(unit_vectors(3).len(), 6);
    }
}
