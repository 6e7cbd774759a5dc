use serde::{Deserialize, Serialize};

use super::kernel::TorusKernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricEstimate {
    /// `max_A π(A)^{1-1/d} / a(∂A)` over the probed sets.
    pub kappa: f64,
    pub ratios: Vec<f64>,
}

/// Ratio `π(A)^{1-1/d} / a(∂A)` for one set, `a(x, y) = π(x) Q(x, y)`.
pub fn boundary_ratio(k: &TorusKernel, set: &[usize]) -> f64 {
    let n = k.num_sites();
    let mut inside = vec![false; n];
    for &x in set {
        inside[x] = true;
    }
    let pi = k.pi();
    let mass: f64 = set.iter().map(|&x| pi[x]).sum();
    let mut boundary = 0.0;
    for &x in set {
        let (c, v) = k.row(x);
        for (&y, &q) in c.iter().zip(v) {
            if !inside[y] {
                boundary += pi[x] * q;
            }
        }
    }
    let d = k.torus().dim as f64;
    mass.powf(1.0 - 1.0 / d) / boundary
}

/// Empirical isoperimetric constant of a reversible kernel over `sets`.
pub fn isoperimetric_check(k: &TorusKernel, sets: &[Vec<usize>]) -> Result<IsoperimetricEstimate> {
    let scale = k.pi().iter().cloned().fold(0.0, f64::max);
    if k.detailed_balance_error() > 1e-12 * scale {
        return Err(Error::Contract(
            "isoperimetric check needs a kernel reversible with respect to π".into(),
        ));
    }
    let n = k.num_sites();
    let mut ratios = Vec::with_capacity(sets.len());
    for (i, s) in sets.iter().enumerate() {
        let mut s = s.clone();
        s.sort_unstable();
        s.dedup();
        if s.is_empty() {
            return Err(Error::Parameter(format!("set {i} is empty")));
        }
        if 2 * s.len() > n {
            return Err(Error::Parameter(format!(
                "set {i} has {} of {n} sites; at most half the torus is allowed",
                s.len()
            )));
        }
        if let Some(&x) = s.iter().find(|&&x| x >= n) {
            return Err(Error::Parameter(format!("set {i} contains out-of-range site {x}")));
        }
        ratios.push(boundary_ratio(k, &s));
    }
    let kappa = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(IsoperimetricEstimate { kappa, ratios })
}

/// Sites of the box `corner + [0, r)^d`.
pub fn box_set(k: &TorusKernel, corner: &[i64], r: usize) -> Vec<usize> {
    let t = k.torus();
    let total = r.pow(t.dim as u32);
    (0..total)
        .map(|mut j| {
            let off: Vec<i64> = (0..t.dim)
                .map(|_| {
                    let c = (j % r) as i64;
                    j /= r;
                    c
                })
                .collect();
            t.index(&crate::lattice::add(corner, &off))
        })
        .collect()
}
