use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::chain::{DriftField, EnvChain};
use crate::error::{Error, Result};
use crate::lattice::Point;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 1_000_000;

/// Residuals reported with a solved corrector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorResiduals {
    /// `max ‖(-L) u - d₀‖∞`.
    pub poisson: f64,
    /// `max |χ(x + y) - χ(x) - χ(y, T_x ω)|` over the probed pairs.
    pub cocycle: f64,
    /// `max_x |Σ_z χ(z, T_x ω) p_z(T_x ω) + d₀(T_x ω)|`.
    pub drift_cancellation: f64,
    pub sweeps: usize,
}

/// Potential `u` (component-major, `⟨u⟩_ℚ = 0`) and corrector `χ(x) = u(x) - u(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectorField {
    pub u: Vec<Vec<f64>>,
    pub chi: Vec<Vec<f64>>,
    pub residuals: CorrectorResiduals,
}

impl CorrectorField {
    /// `χ(z, T_x ω) = χ(x + z) - χ(x)` for the torus site `y = x + z`.
    pub fn increment(&self, x: usize, y: usize) -> Vec<f64> {
        self.chi.iter().map(|c| c[y] - c[x]).collect()
    }

    /// Same shape with `χ ≡ 0`.
    pub fn zeroed(&self) -> Self {
        let zero: Vec<Vec<f64>> = self.chi.iter().map(|c| vec![0.0; c.len()]).collect();
        Self {
            u: zero.clone(),
            chi: zero,
            residuals: self.residuals.clone(),
        }
    }

    /// Columns `x0..x{d-1}, chi0..chi{d-1}`, one row per site.
    pub fn to_csv(&self, chain: &EnvChain) -> String {
        use std::fmt::Write as _;
        let d = self.chi.len();
        let mut s = String::new();
        let head: Vec<String> = (0..d)
            .map(|k| format!("x{k}"))
            .chain((0..d).map(|k| format!("chi{k}")))
            .collect();
        s.push_str(&head.join(","));
        s.push('\n');
        let torus = chain.env().torus();
        for x in 0..chain.num_sites() {
            let c = torus.coords(x);
            let mut row: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            row.extend(self.chi.iter().map(|ch| format!("{:.15e}", ch[x])));
            writeln!(s, "{}", row.join(",")).unwrap();
        }
        s
    }
}

fn deflate(chain: &EnvChain, u: &mut [f64]) {
    let m = chain.mean(u);
    u.iter_mut().for_each(|v| *v -= m);
}

/// `‖((1 + λ) I - R) u - h‖∞`.
fn resolvent_residual(chain: &EnvChain, lambda: f64, u: &[f64], h: &[f64]) -> f64 {
    let ru = chain.apply_r(u);
    u.iter()
        .zip(&ru)
        .zip(h)
        .map(|((a, b), c)| ((1.0 + lambda) * a - b - c).abs())
        .fold(0.0, f64::max)
}

/// Solve `((1 + λ) I - R) u = h` for one component with `⟨h⟩_ℚ = 0`, iterating
/// on the lazy chain `R' = (I + R) / 2`:
/// `u ← (h/2 + R'u) / (1 + λ/2)` with the ℚ-mean projected out each sweep.
fn lazy_solve(chain: &EnvChain, lambda: f64, h: &[f64], tol: f64, cap: usize) -> Result<(Vec<f64>, usize)> {
    let n = h.len();
    let mut u = vec![0.0; n];
    let denom = 1.0 + 0.5 * lambda;
    let mut last = f64::INFINITY;
    for sweep in 1..=cap {
        let ru = chain.apply_r(&u);
        for x in 0..n {
            u[x] = (0.5 * h[x] + 0.5 * (u[x] + ru[x])) / denom;
        }
        deflate(chain, &mut u);
        if sweep % 8 == 0 || sweep == cap {
            last = resolvent_residual(chain, lambda, &u, h);
            if last < tol {
                return Ok((u, sweep));
            }
        }
    }
    Err(Error::Numerical {
        message: format!("corrector iteration did not converge in {cap} sweeps (λ = {lambda})"),
        residual: last,
    })
}

fn check_solvable(chain: &EnvChain, drift: &DriftField, tol: f64) -> Result<()> {
    for (k, c) in drift.d0.iter().enumerate() {
        let m = chain.mean(c);
        if m.abs() > tol {
            return Err(Error::Contract(format!(
                "drift component {k} has ℚ-mean {m:e}; the Poisson equation is not solvable"
            )));
        }
    }
    Ok(())
}

/// `u_λ` solving `(λ - L) u = d₀` coordinatewise; returns the field and the
/// sweeps used.
pub fn resolvent_solve(chain: &EnvChain, drift: &DriftField, lambda: f64, tol: f64) -> Result<(Vec<Vec<f64>>, usize)> {
    if !(lambda > 0.0) || !(tol > 0.0) {
        return Err(Error::Parameter(format!(
            "resolvent needs λ > 0 and tol > 0, got λ = {lambda}, tol = {tol}"
        )));
    }
    let mut out = Vec::with_capacity(drift.d0.len());
    let mut sweeps = 0;
    for h in &drift.d0 {
        let (u, s) = lazy_solve(chain, lambda, h, tol, MAX_SWEEPS)?;
        sweeps = sweeps.max(s);
        out.push(u);
    }
    Ok((out, sweeps))
}

/// Exact Poisson solve `-L u = d₀` with `⟨u⟩_ℚ = 0`, then the corrector and
/// its residuals.
pub fn poisson_solve(chain: &EnvChain, drift: &DriftField, tol: f64) -> Result<CorrectorField> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    check_solvable(chain, drift, tol)?;
    let mut u = Vec::with_capacity(drift.d0.len());
    let mut sweeps = 0;
    for h in &drift.d0 {
        let (c, s) = lazy_solve(chain, 0.0, h, tol, MAX_SWEEPS)?;
        sweeps = sweeps.max(s);
        u.push(c);
    }
    Ok(finish(chain, drift, u, sweeps))
}

/// Dense LU solve of `-L u = d₀`, `⟨u⟩_ℚ = 0`; the equation at site 0 is
/// replaced by the mean constraint.
pub fn poisson_solve_dense(chain: &EnvChain, drift: &DriftField) -> Result<CorrectorField> {
    check_solvable(chain, drift, 1e-10)?;
    let n = chain.num_sites();
    let mut m = DMatrix::<f64>::identity(n, n);
    for x in 0..n {
        let (c, v) = chain.r().row(x);
        for (&y, &p) in c.iter().zip(v) {
            m[(x, y)] -= p;
        }
    }
    for y in 0..n {
        m[(0, y)] = chain.q_measure()[y];
    }
    let lu = m.lu();
    let mut u = Vec::with_capacity(drift.d0.len());
    for h in &drift.d0 {
        let mut rhs = DVector::from_column_slice(h);
        rhs[0] = 0.0;
        let sol = lu.solve(&rhs).ok_or_else(|| Error::Numerical {
            message: "singular Poisson system".into(),
            residual: f64::NAN,
        })?;
        u.push(sol.as_slice().to_vec());
    }
    Ok(finish(chain, drift, u, 0))
}

fn finish(chain: &EnvChain, drift: &DriftField, u: Vec<Vec<f64>>, sweeps: usize) -> CorrectorField {
    let poisson = u
        .iter()
        .zip(&drift.d0)
        .map(|(c, h)| resolvent_residual(chain, 0.0, c, h))
        .fold(0.0, f64::max);
    let chi: Vec<Vec<f64>> = u.iter().map(|c| c.iter().map(|v| v - c[0]).collect()).collect();
    let mut field = CorrectorField {
        u,
        chi,
        residuals: CorrectorResiduals {
            poisson,
            cocycle: 0.0,
            drift_cancellation: 0.0,
            sweeps,
        },
    };
    field.residuals.cocycle = cocycle_residual(chain, &field);
    field.residuals.drift_cancellation = drift_cancellation_residual(chain, &field, drift);
    field
}

/// Path sum of the unit increments `G_e(T_x ω) = u(x + e) - u(x)` from `x`
/// along `y`, moving coordinate by coordinate in `order`.
pub fn path_sum(chain: &EnvChain, u: &[f64], x: usize, y: &[i64], order: &[usize]) -> f64 {
    let torus = chain.env().torus();
    let mut site = x;
    let mut acc = 0.0;
    for &k in order {
        let mut e: Point = vec![0; y.len()];
        e[k] = y[k].signum();
        for _ in 0..y[k].abs() {
            let next = torus.shift(site, &e);
            acc += u[next] - u[site];
            site = next;
        }
    }
    acc
}

/// Cocycle check `χ(x + y) = χ(x) + χ(y, T_x ω)`, with `χ(y, T_x ω)`
/// assembled from unit increments along a path that visits coordinates in the
/// opposite order to the one used for `χ(x)`.
pub fn cocycle_residual(chain: &EnvChain, field: &CorrectorField) -> f64 {
    let torus = chain.env().torus();
    let d = torus.dim;
    let fwd: Vec<usize> = (0..d).collect();
    let rev: Vec<usize> = (0..d).rev().collect();
    let half = (torus.side / 2) as i64;
    let probes: Vec<Point> = crate::lattice::box_points(d, 2.min(half))
        .into_iter()
        .chain((0..d).map(|k| {
            let mut p = vec![1; d];
            p[k] = half;
            p
        }))
        .collect();
    let mut worst: f64 = 0.0;
    for u in &field.u {
        for x in 0..chain.num_sites() {
            let xc = torus.delta(0, x);
            let chi_x = path_sum(chain, u, 0, &xc, &fwd);
            for y in &probes {
                let xy = crate::lattice::add(&xc, y);
                let lhs = path_sum(chain, u, 0, &xy, &fwd);
                let rhs = chi_x + path_sum(chain, u, x, y, &rev);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

/// `max_x |Σ_z χ(z, T_x ω) p_z(T_x ω) + d₀(T_x ω)|` over components.
pub fn drift_cancellation_residual(chain: &EnvChain, field: &CorrectorField, drift: &DriftField) -> f64 {
    let mut worst: f64 = 0.0;
    for (chi, d0) in field.chi.iter().zip(&drift.d0) {
        for x in 0..chain.num_sites() {
            let s: f64 = chain
                .neighbors(x)
                .iter()
                .zip(chain.probs(x))
                .map(|(&y, &p)| p * (chi[y] - chi[x]))
                .sum();
            worst = worst.max((s + d0[x]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{build_env_chain, local_drift};
    use crate::env::{build_environment, random_conductance, square_triangle, uniformly_elliptic};

    fn chain(model: crate::env::CycleModel, side: usize, seed: u64) -> EnvChain {
        build_env_chain(&build_environment(&model, side, seed).unwrap()).unwrap()
    }

    #[test]
    fn constant_conductance_has_no_corrector() {
        let c = chain(random_conductance(2, 1.0, 1.0).unwrap(), 8, 0);
        let d = local_drift(&c);
        let f = poisson_solve(&c, &d, DEFAULT_TOL).unwrap();
        assert!(f.chi.iter().flatten().all(|&v| v == 0.0));
        let (u, _) = resolvent_solve(&c, &d, 0.3, 1e-12).unwrap();
        assert!(u.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn square_triangle_residuals_and_dense_agreement() {
        let c = chain(square_triangle(0.5).unwrap(), 16, 7);
        let d = local_drift(&c);
        let f = poisson_solve(&c, &d, DEFAULT_TOL).unwrap();
        assert!(f.residuals.poisson < 1e-10);
        assert!(f.residuals.cocycle < 1e-10);
        assert!(f.residuals.drift_cancellation < 1e-10);
        assert!(f.chi.iter().all(|c| c[0] == 0.0));
        let dense = poisson_solve_dense(&c, &d).unwrap();
        let diff = f
            .chi
            .iter()
            .flatten()
            .zip(dense.chi.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn resolvent_at_lambda_one_is_a_contraction() {
        let c = chain(square_triangle(0.5).unwrap(), 16, 3);
        let d = local_drift(&c);
        let (u, _) = resolvent_solve(&c, &d, 1.0, 1e-13).unwrap();
        for (uk, dk) in u.iter().zip(&d.d0) {
            let su = uk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sd = dk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(su <= sd + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters_and_unsolvable_data() {
        let c = chain(uniformly_elliptic(0.5, 1.5).unwrap(), 8, 1);
        let d = local_drift(&c);
        assert!(matches!(resolvent_solve(&c, &d, 0.0, 1e-12), Err(Error::Parameter(_))));
        let mut bad = d.clone();
        bad.d0[0].iter_mut().for_each(|v| *v += 1.0);
        assert!(matches!(poisson_solve(&c, &bad, 1e-12), Err(Error::Contract(_))));
    }
}
