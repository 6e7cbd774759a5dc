use serde::{Deserialize, Serialize};

use crate::env::{Environment, SiteLaws};
use crate::error::{Error, Result};
use crate::lattice::Torus;

/// Row-stochastic transition matrix on torus sites, stored row-compressed,
/// together with a positive invariant measure `π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusKernel {
    torus: Torus,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    pi: Vec<f64>,
}

impl TorusKernel {
    /// Build from per-row `(column, value)` lists. Duplicate columns are
    /// summed and zero entries dropped; columns end up sorted.
    pub fn from_rows(torus: Torus, rows: Vec<Vec<(usize, f64)>>, pi: Vec<f64>) -> Result<Self> {
        let n = torus.num_sites();
        if rows.len() != n || pi.len() != n {
            return Err(Error::Data(format!(
                "kernel on {n} sites needs {n} rows and {n} π entries, got {} and {}",
                rows.len(),
                pi.len()
            )));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= n {
                    return Err(Error::Data(format!("column {c} out of range")));
                }
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let mut k = Self {
            torus,
            row_ptr,
            cols,
            vals,
            pi,
        };
        k.drop_zeros();
        Ok(k)
    }

    fn drop_zeros(&mut self) {
        if self.vals.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for x in 0..self.num_sites() {
            for e in self.row_ptr[x]..self.row_ptr[x + 1] {
                if self.vals[e] != 0.0 {
                    cols.push(self.cols[e]);
                    vals.push(self.vals[e]);
                }
            }
            row_ptr.push(cols.len());
        }
        self.row_ptr = row_ptr;
        self.cols = cols;
        self.vals = vals;
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn num_sites(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, x: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[x]..self.row_ptr[x + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        let (c, v) = self.row(x);
        c.binary_search(&y).map_or(0.0, |k| v[k])
    }

    pub fn max_entry(&self) -> f64 {
        self.vals.iter().cloned().fold(0.0, f64::max)
    }

    /// `(Qf)(x) = Σ_y Q(x, y) f(y)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.num_sites())
            .map(|x| {
                let (c, v) = self.row(x);
                c.iter().zip(v).map(|(&y, &q)| q * f[y]).sum()
            })
            .collect()
    }

    /// `(μQ)(y) = Σ_x μ(x) Q(x, y)`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_sites()];
        for x in 0..self.num_sites() {
            let (c, v) = self.row(x);
            for (&y, &q) in c.iter().zip(v) {
                out[y] += mu[x] * q;
            }
        }
        out
    }

    /// Matrix product `self · other`; `π` is taken from `self`.
    pub fn compose(&self, other: &TorusKernel) -> TorusKernel {
        let n = self.num_sites();
        let mut acc = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for x in 0..n {
            let (c1, v1) = self.row(x);
            for (&k, &a) in c1.iter().zip(v1) {
                let (c2, v2) = other.row(k);
                for (&y, &b) in c2.iter().zip(v2) {
                    if acc[y] == 0.0 {
                        touched.push(y);
                    }
                    acc[y] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &y in &touched {
                if acc[y] != 0.0 {
                    cols.push(y);
                    vals.push(acc[y]);
                }
                acc[y] = 0.0;
            }
            touched.clear();
            row_ptr.push(cols.len());
        }
        TorusKernel {
            torus: self.torus,
            row_ptr,
            cols,
            vals,
            pi: self.pi.clone(),
        }
    }

    /// `Q^m` by repeated multiplication (`m ≥ 1`).
    pub fn power(&self, m: usize) -> TorusKernel {
        assert!(m >= 1, "kernel power must be at least 1");
        let mut out = self.clone();
        for _ in 1..m {
            out = out.compose(self);
        }
        out
    }

    /// Adjoint in `L²(π)`: `Q*(x, y) = π(y) Q(y, x) / π(x)`.
    pub fn adjoint(&self) -> Result<TorusKernel> {
        if let Some(x) = self.pi.iter().position(|&p| !(p > 0.0)) {
            return Err(Error::Data(format!("π({x}) = {} is not positive", self.pi[x])));
        }
        let n = self.num_sites();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for y in 0..n {
            let (c, v) = self.row(y);
            for (&x, &q) in c.iter().zip(v) {
                rows[x].push((y, self.pi[y] * q / self.pi[x]));
            }
        }
        TorusKernel::from_rows(self.torus, rows, self.pi.clone())
    }

    /// `(Q^m)^* Q^m`, reversible with respect to `π`.
    pub fn symmetrized_power(&self, m: usize) -> Result<TorusKernel> {
        let qm = self.power(m);
        Ok(qm.adjoint()?.compose(&qm))
    }

    /// `max_x |Σ_y Q(x, y) - 1|`.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.num_sites())
            .map(|x| (self.row(x).1.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_y |(πQ)(y) - π(y)| / max π`.
    pub fn invariance_residual(&self) -> f64 {
        let pq = self.apply_left(&self.pi);
        let scale = self.pi.iter().cloned().fold(0.0, f64::max);
        pq.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
    }

    /// `max_{x,y} |π(x)Q(x, y) - π(y)Q(y, x)|`.
    pub fn detailed_balance_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for x in 0..self.num_sites() {
            let (c, v) = self.row(x);
            for (&y, &q) in c.iter().zip(v) {
                err = err.max((self.pi[x] * q - self.pi[y] * self.get(y, x)).abs());
            }
        }
        err
    }

    /// `max_{x,y} |Q(x, y) - Q'(x, y)|` over the union of supports.
    pub fn max_abs_diff(&self, other: &TorusKernel) -> f64 {
        let mut err: f64 = 0.0;
        for x in 0..self.num_sites() {
            let (c, v) = self.row(x);
            for (&y, &q) in c.iter().zip(v) {
                err = err.max((q - other.get(x, y)).abs());
            }
            let (c, v) = other.row(x);
            for (&y, &q) in c.iter().zip(v) {
                err = err.max((q - self.get(x, y)).abs());
            }
        }
        err
    }

    /// Largest ℓ∞ torus displacement carried by a nonzero entry.
    pub fn range_linf(&self) -> i64 {
        let mut r = 0;
        for x in 0..self.num_sites() {
            for &y in self.row(x).0 {
                r = r.max(self.torus.dist_linf(x, y));
            }
        }
        r
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.num_sites();
        let mut d = vec![vec![0.0; n]; n];
        for (x, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(x);
            for (&y, &q) in c.iter().zip(v) {
                row[y] = q;
            }
        }
        d
    }
}

/// One-step kernel `Q_ω(x, x + z) = p_z(T_x ω)` with `π_ω(x) = M(T_x ω)`.
pub fn assemble_kernel(env: &Environment) -> Result<TorusKernel> {
    let laws = SiteLaws::new(env)?;
    let torus = env.torus();
    let rows = laws
        .probs
        .iter()
        .enumerate()
        .map(|(x, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(s, &p)| (torus.shift(x, &laws.range.steps[s]), p))
                .collect()
        })
        .collect();
    TorusKernel::from_rows(torus, rows, laws.mass)
}

/// `Q*` of `k`; fails when some `π(x) ≤ 0`.
pub fn adjoint_kernel(k: &TorusKernel) -> Result<TorusKernel> {
    k.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_environment, random_conductance, reverse_model, square_triangle};

    #[test]
    fn constant_conductance_is_doubly_stochastic_and_symmetric() {
        let env = build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 8, 0).unwrap();
        let k = assemble_kernel(&env).unwrap();
        assert_eq!(k.num_sites(), 64);
        let d = k.to_dense();
        for x in 0..64 {
            assert_eq!(d.iter().map(|r| r[x]).sum::<f64>(), 1.0);
            for y in 0..64 {
                assert_eq!(d[x][y], d[y][x]);
            }
        }
        assert_eq!(k.adjoint().unwrap(), k);
    }

    #[test]
    fn square_triangle_rows_and_invariance() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap();
        let k = assemble_kernel(&env).unwrap();
        for x in 0..k.num_sites() {
            assert!(k.row(x).0.len() <= 5);
        }
        assert!(k.row_sum_error() < 1e-12);
        assert!(k.invariance_residual() < 1e-12);
        assert_eq!(k.range_linf(), 1);
    }

    #[test]
    fn adjoint_is_the_reversed_walk() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap();
        let k = assemble_kernel(&env).unwrap();
        let star = k.adjoint().unwrap();
        let rev_env = env.with_model(reverse_model(env.model())).unwrap();
        let rev = assemble_kernel(&rev_env).unwrap();
        assert!(star.max_abs_diff(&rev) < 1e-12);
        assert!(star.invariance_residual() < 1e-12);
        assert!(star.adjoint().unwrap().max_abs_diff(&k) < 1e-15);
    }

    #[test]
    fn adjoint_rejects_nonpositive_pi() {
        let t = Torus::new(1, 3);
        let rows = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
        let k = TorusKernel::from_rows(t, rows, vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(k.adjoint(), Err(Error::Data(_))));
    }

    #[test]
    fn powers_keep_stochasticity_and_invariance() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 3).unwrap();
        let k = assemble_kernel(&env).unwrap();
        for m in [2, 5, 9] {
            let p = k.power(m);
            assert!(p.row_sum_error() < 1e-10);
            assert!(p.invariance_residual() < 1e-10);
        }
        let s = k.symmetrized_power(2).unwrap();
        assert!(s.detailed_balance_error() < 1e-12);
        assert!(s.row_sum_error() < 1e-12);
    }
}
