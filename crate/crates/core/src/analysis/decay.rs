use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::TorusKernel;
use crate::error::{Error, Result};

/// Fit window start: the first few steps are dominated by lattice effects.
pub const FIT_START: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub dim: usize,
    pub ns: Vec<usize>,
    /// `u_n = sup_{x,y} Q^n(x, y) / π(y)`.
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// `max_n u_n n^{d/2}` over the unsaturated range.
    pub c1: f64,
    pub window: (usize, usize),
    /// First `n` at which `u_n` came within 10% of its equilibrium value.
    pub saturated_at: Option<usize>,
    pub period: usize,
    pub equilibrium: f64,
}

impl DecaySeries {
    pub fn bound(&self, n: usize) -> f64 {
        self.c1 * (n as f64).powf(-(self.dim as f64) / 2.0)
    }

    /// Columns `n,u_n,bound`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,u_n,bound\n");
        for (&n, &u) in self.ns.iter().zip(&self.values) {
            writeln!(s, "{n},{u:.12e},{:.12e}", self.bound(n)).unwrap();
        }
        s
    }
}

/// Summary of `ondiag_decay` and `gaussian_bound_fit` on one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub slope: f64,
    pub intercept: f64,
    pub c1: f64,
    pub c3: Option<f64>,
    pub window: (usize, usize),
    pub saturated_at: Option<usize>,
}

impl DecaySummary {
    pub fn new(series: &DecaySeries, c3: Option<f64>) -> Self {
        Self {
            slope: series.slope,
            intercept: series.intercept,
            c1: series.c1,
            c3,
            window: series.window,
            saturated_at: series.saturated_at,
        }
    }
}

/// Period of the chain from BFS levels out of site 0.
pub fn kernel_period(k: &TorusKernel) -> usize {
    let n = k.num_sites();
    let mut level = vec![usize::MAX; n];
    let mut queue = VecDeque::from([0usize]);
    level[0] = 0;
    while let Some(x) = queue.pop_front() {
        for &y in k.row(x).0 {
            if level[y] == usize::MAX {
                level[y] = level[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut g = 0usize;
    for x in 0..n {
        if level[x] == usize::MAX {
            continue;
        }
        for &y in k.row(x).0 {
            let diff = (level[x] + 1).abs_diff(level[y]);
            g = gcd(g, diff);
        }
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Dense powers `P_1 = Q, P_{n+1} = Q P_n`, handing each to `visit(n, P_n)`
/// as a row-major `N × N` slice. Stops early when `visit` returns `false`.
pub fn for_each_power(k: &TorusKernel, n_max: usize, mut visit: impl FnMut(usize, &[f64]) -> bool) {
    let n = k.num_sites();
    let mut cur = vec![0.0; n * n];
    for x in 0..n {
        let (c, v) = k.row(x);
        for (&y, &q) in c.iter().zip(v) {
            cur[x * n + y] = q;
        }
    }
    let mut next = vec![0.0; n * n];
    for step in 1..=n_max {
        if !visit(step, &cur) {
            return;
        }
        if step == n_max {
            break;
        }
        next.par_chunks_mut(n).enumerate().for_each(|(x, out)| {
            out.fill(0.0);
            let (c, v) = k.row(x);
            for (&y, &q) in c.iter().zip(v) {
                let src = &cur[y * n..(y + 1) * n];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += q * s;
                }
            }
        });
        std::mem::swap(&mut cur, &mut next);
    }
}

fn sup_ratio(p: &[f64], pi: &[f64]) -> f64 {
    let inv: Vec<f64> = pi.iter().map(|p| 1.0 / p).collect();
    p.par_chunks(pi.len())
        .map(|row| row.iter().zip(&inv).map(|(a, b)| a * b).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Least-squares line through `(ln n, ln u_n)`.
pub fn loglog_fit(ns: &[usize], us: &[f64]) -> (f64, f64) {
    let m = ns.len() as f64;
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = us.iter().map(|u| u.ln()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::Parameter("n_max must be at least 1".into()));
    }
    Ok(())
}

/// On-diagonal decay `u_n` for `n = 1..=n_max`, with a log-log fit on
/// `[16, min(n_max, saturation))`.
///
/// Powering stops at the first saturated `n`; that `n` is reported in
/// `saturated_at` and excluded from the fit.
pub fn ondiag_decay(k: &TorusKernel, n_max: usize) -> Result<DecaySeries> {
    check_n_max(n_max)?;
    let pi = k.pi();
    let period = kernel_period(k);
    let equilibrium = period as f64 / pi.iter().sum::<f64>();
    let mut ns = Vec::new();
    let mut values = Vec::new();
    let mut saturated_at = None;
    for_each_power(k, n_max, |n, p| {
        let u = sup_ratio(p, pi);
        if u <= 1.1 * equilibrium {
            saturated_at = Some(n);
            return false;
        }
        ns.push(n);
        values.push(u);
        true
    });
    let d = k.torus().dim as f64;
    let c1 = ns
        .iter()
        .zip(&values)
        .map(|(&n, &u)| u * (n as f64).powf(d / 2.0))
        .fold(0.0, f64::max);
    let hi = *ns.last().unwrap_or(&0);
    let lo = FIT_START.min(hi);
    let idx: Vec<usize> = (0..ns.len()).filter(|&i| ns[i] >= lo).collect();
    let (slope, intercept) = if idx.len() >= 2 {
        loglog_fit(
            &idx.iter().map(|&i| ns[i]).collect::<Vec<_>>(),
            &idx.iter().map(|&i| values[i]).collect::<Vec<_>>(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(DecaySeries {
        dim: k.torus().dim,
        ns,
        values,
        slope,
        intercept,
        c1,
        window: (lo, hi),
        saturated_at,
        period,
        equilibrium,
    })
}

/// Smallest `C` with `p ≤ C n^{-d/2} exp(-r² / (C n))`.
fn smallest_gaussian_constant(p: f64, n: usize, r2: f64, d: f64) -> f64 {
    let n = n as f64;
    let target = p.ln() + d / 2.0 * n.ln();
    let g = |lc: f64| lc - r2 / (lc.exp() * n) - target;
    // g is increasing in ln C
    let (mut lo, mut hi) = (-50.0f64, 50.0f64);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    hi.exp()
}

/// Fitted Gaussian constant over `n ≤ n_max` (stopping at saturation), with
/// torus Euclidean distance between source and target.
pub fn gaussian_bound_fit(k: &TorusKernel, n_max: usize) -> Result<GaussianFit> {
    check_n_max(n_max)?;
    let t = k.torus();
    let n = k.num_sites();
    let pi = k.pi();
    let equilibrium = kernel_period(k) as f64 / pi.iter().sum::<f64>();

    let mut classes: Vec<i64> = (0..n).map(|y| t.dist2_sq(0, y)).collect();
    classes.sort_unstable();
    classes.dedup();
    let class_of: Vec<u32> = (0..n * n)
        .into_par_iter()
        .map(|xy| {
            let r2 = t.dist2_sq(xy / n, xy % n);
            classes.binary_search(&r2).unwrap() as u32
        })
        .collect();

    let d = t.dim as f64;
    let mut c3: f64 = 0.0;
    let mut worst = (0usize, 0i64);
    let mut last_n = 0;
    let mut saturated_at = None;
    for_each_power(k, n_max, |step, p| {
        if sup_ratio(p, pi) <= 1.1 * equilibrium {
            saturated_at = Some(step);
            return false;
        }
        let mut per_class = vec![0.0f64; classes.len()];
        for (v, &c) in p.iter().zip(&class_of) {
            let slot = &mut per_class[c as usize];
            if *v > *slot {
                *slot = *v;
            }
        }
        for (ci, &m) in per_class.iter().enumerate() {
            if m > 0.0 {
                let c = smallest_gaussian_constant(m, step, classes[ci] as f64, d);
                if c > c3 {
                    c3 = c;
                    worst = (step, classes[ci]);
                }
            }
        }
        last_n = step;
        true
    });
    Ok(GaussianFit {
        c3,
        worst_n: worst.0,
        worst_r2: worst.1,
        n_used: last_n,
        saturated_at,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub c3: f64,
    pub worst_n: usize,
    pub worst_r2: i64,
    pub n_used: usize,
    pub saturated_at: Option<usize>,
}
