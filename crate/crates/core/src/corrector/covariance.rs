use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::chain::{DriftField, EnvChain};
use super::solve::{resolvent_solve, CorrectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    pub a: Vec<Vec<f64>>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub asymmetry: f64,
}

impl Covariance {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// `A = Σ_x ℚ(x) Σ_z p_z(T_x ω) (z + χ(z, T_x ω)) ⊗ (z + χ(z, T_x ω))`.
///
/// A negative smallest eigenvalue beyond `1e-12` is reported as a numerical
/// error: the corrector is not converged.
pub fn covariance_matrix(chain: &EnvChain, corrector: &CorrectorField) -> Result<Covariance> {
    let d = chain.dim();
    let mut a = vec![vec![0.0; d]; d];
    let mut v = vec![0.0; d];
    for x in 0..chain.num_sites() {
        let qx = chain.q_measure()[x];
        for ((z, &p), &y) in chain.steps().iter().zip(chain.probs(x)).zip(chain.neighbors(x)) {
            if p == 0.0 {
                continue;
            }
            for k in 0..d {
                v[k] = z[k] as f64 + corrector.chi[k][y] - corrector.chi[k][x];
            }
            for i in 0..d {
                for j in 0..d {
                    a[i][j] += qx * p * v[i] * v[j];
                }
            }
        }
    }
    let asymmetry = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (a[i][j] - a[j][i]).abs())
        .fold(0.0, f64::max);
    let eigenvalues = symmetric_eigenvalues(&a);
    if eigenvalues[0] < -1e-12 {
        return Err(Error::Numerical {
            message: "covariance matrix is not positive semidefinite; corrector unconverged".into(),
            residual: eigenvalues[0],
        });
    }
    Ok(Covariance {
        a,
        eigenvalues,
        asymmetry,
    })
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let d = a.len();
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (a[i][j] + a[j][i]));
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// `max_k ‖λ u_λ^k‖_{L²(ℚ)}`.
    pub lambda_u_norm: f64,
    /// `max_{k,e} ‖w∘T_e - w‖_{L²(ℚ)}` with `w = u_λ - u_{λ_next}`; absent on the last row.
    pub cauchy_increment: Option<f64>,
    /// `max_{k,e} ‖(u_λ∘T_e - u_λ) - G_e‖_{L²(ℚ)}` against the Poisson solution, when given.
    pub increment_error: Option<f64>,
    pub sweeps: usize,
}

fn unit_shift_norm(chain: &EnvChain, w: &[f64]) -> f64 {
    let torus = chain.env().torus();
    let d = chain.dim();
    let mut best: f64 = 0.0;
    for k in 0..d {
        let mut e = vec![0i64; d];
        e[k] = 1;
        let diff: Vec<f64> = (0..w.len()).map(|x| w[torus.shift(x, &e)] - w[x]).collect();
        best = best.max(chain.norm(&diff));
    }
    best
}

/// Diagnostics of the resolvent family along decreasing `lambdas`.
pub fn lambda_sweep(
    chain: &EnvChain,
    drift: &DriftField,
    lambdas: &[f64],
    exact: Option<&CorrectorField>,
) -> Result<Vec<SweepRow>> {
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0)) || lambdas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter(
            "lambdas must be positive and strictly decreasing".into(),
        ));
    }
    let mut sols = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        sols.push(resolvent_solve(chain, drift, l, 1e-12)?);
    }
    let mut rows = Vec::with_capacity(lambdas.len());
    for (i, &l) in lambdas.iter().enumerate() {
        let (u, sweeps) = &sols[i];
        let lambda_u_norm = u
            .iter()
            .map(|c| chain.norm(&c.iter().map(|v| l * v).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        let cauchy_increment = sols.get(i + 1).map(|(next, _)| {
            u.iter()
                .zip(next)
                .map(|(a, b)| unit_shift_norm(chain, &a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
                .fold(0.0, f64::max)
        });
        let increment_error = exact.map(|f| {
            u.iter()
                .zip(&f.u)
                .map(|(a, b)| unit_shift_norm(chain, &a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
                .fold(0.0, f64::max)
        });
        rows.push(SweepRow {
            lambda: l,
            lambda_u_norm,
            cauchy_increment,
            increment_error,
            sweeps: *sweeps,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{build_env_chain, local_drift, poisson_solve, DEFAULT_TOL};
    use crate::env::{build_environment, random_conductance, square_triangle};

    #[test]
    fn simple_walk_has_half_identity() {
        let c = build_env_chain(&build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 8, 0).unwrap()).unwrap();
        let d = local_drift(&c);
        let f = poisson_solve(&c, &d, DEFAULT_TOL).unwrap();
        let cov = covariance_matrix(&c, &f).unwrap();
        assert!((cov.a[0][0] - 0.5).abs() < 1e-12 && (cov.a[1][1] - 0.5).abs() < 1e-12);
        assert!(cov.a[0][1].abs() < 1e-12);
        let rows = lambda_sweep(&c, &d, &[1e-1, 1e-2], Some(&f)).unwrap();
        assert!(rows
            .iter()
            .all(|r| r.lambda_u_norm == 0.0 && r.increment_error == Some(0.0)));
    }

    #[test]
    fn square_triangle_covariance_and_sweep() {
        let c = build_env_chain(&build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap()).unwrap();
        let d = local_drift(&c);
        let f = poisson_solve(&c, &d, DEFAULT_TOL).unwrap();
        let cov = covariance_matrix(&c, &f).unwrap();
        assert!(cov.asymmetry < 1e-12 && cov.min_eigenvalue() > 0.0);
        let again = covariance_matrix(&c, &poisson_solve(&c, &d, DEFAULT_TOL).unwrap()).unwrap();
        assert_eq!(cov, again);
        let rows = lambda_sweep(&c, &d, &[1e-2, 1e-3, 1e-4], Some(&f)).unwrap();
        assert!(rows.windows(2).all(|w| w[1].lambda_u_norm < w[0].lambda_u_norm));
        assert!(rows.windows(2).all(|w| w[1].increment_error < w[0].increment_error));
        assert!(lambda_sweep(&c, &d, &[1e-3, 1e-2], None).is_err());
    }
}
