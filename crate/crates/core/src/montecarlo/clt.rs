use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::{walk_with, StepSampler};
use crate::analysis::{assemble_kernel, kernel_period};
use crate::corrector::{symmetric_eigenvalues, CorrectorField};
use crate::env::{step_distribution, Environment};
use crate::error::{Error, Result};
use crate::rng::mix;

/// `max_y ‖Σ_z p_z(T_y ω) (z + χ(y + z) - χ(y))‖∞`: the one-step conditional
/// mean of `M_{n+1} - M_n` given `X_n = y`.
pub fn martingale_residual(env: &Environment, corrector: &CorrectorField) -> Result<f64> {
    let torus = env.torus();
    let d = env.dim();
    let mut worst: f64 = 0.0;
    for y in 0..env.num_sites() {
        let law = step_distribution(env, y)?;
        let mut m = vec![0.0; d];
        for (z, &p) in law.support.iter().zip(&law.probs) {
            let to = torus.shift(y, z);
            for k in 0..d {
                m[k] += p * (z[k] as f64 + corrector.chi[k][to] - corrector.chi[k][y]);
            }
        }
        worst = m.iter().fold(worst, |w, v| w.max(v.abs()));
    }
    Ok(worst)
}

/// `Σ_y ℚ(y) E[(M_{n+1} - M_n)(M_{n+1} - M_n)ᵀ | X_n = y]`, read off the
/// assembled kernel rows.
pub fn martingale_increment_covariance(env: &Environment, corrector: &CorrectorField) -> Result<Vec<Vec<f64>>> {
    let k = assemble_kernel(env)?;
    let torus = env.torus();
    let d = env.dim();
    let total: f64 = k.pi().iter().sum();
    let mut a = vec![vec![0.0; d]; d];
    for y in 0..k.num_sites() {
        let w = k.pi()[y] / total;
        let (cols, vals) = k.row(y);
        for (&to, &p) in cols.iter().zip(vals) {
            let z = torus.delta(y, to);
            let v: Vec<f64> = (0..d)
                .map(|c| z[c] as f64 + corrector.chi[c][to] - corrector.chi[c][y])
                .collect();
            for i in 0..d {
                for j in 0..d {
                    a[i][j] += w * p * v[i] * v[j];
                }
            }
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltResult {
    pub n: usize,
    pub walkers: usize,
    /// Mean of `X_N / √N`.
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Mean of `X_N / N`.
    pub mean_drift: Vec<f64>,
    /// Covariance of `X_N / √N`.
    pub empirical_cov: Vec<Vec<f64>>,
    pub std_errors: Vec<Vec<f64>>,
    pub target_a: Vec<Vec<f64>>,
    pub z_scores: Vec<Vec<f64>>,
    /// Covariance of `M_N / √N` with `M_N = X_N + χ(X_N)`.
    pub martingale_cov: Vec<Vec<f64>>,
    /// Mean of `M_N / √N`; unlike `mean` it has expectation exactly zero.
    pub martingale_mean: Vec<f64>,
    /// `tr Cov(χ(X_N)) / tr Cov(X_N)`.
    pub corrector_share: f64,
}

impl CltResult {
    /// Every covariance entry within `max(4 SE, 5% |A_ij|)` of the target.
    pub fn covariance_ok(&self) -> bool {
        let d = self.target_a.len();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let tol = (4.0 * self.std_errors[i][j]).max(0.05 * self.target_a[i][j].abs());
                (self.empirical_cov[i][j] - self.target_a[i][j]).abs() <= tol
            })
        })
    }

    /// Mean of `X_N / √N` within 4 SE of zero in every coordinate.
    pub fn mean_ok(&self) -> bool {
        self.mean.iter().zip(&self.mean_se).all(|(m, se)| m.abs() <= 4.0 * se)
    }

    /// Columns `i,j,empirical,target,se,z`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,empirical,target,se,z\n");
        let d = self.target_a.len();
        for i in 0..d {
            for j in 0..d {
                s.push_str(&format!(
                    "{i},{j},{:.12e},{:.12e},{:.12e},{:.6}\n",
                    self.empirical_cov[i][j], self.target_a[i][j], self.std_errors[i][j], self.z_scores[i][j]
                ));
            }
        }
        s
    }
}

fn summarize(xs: &[Vec<f64>], chis: &[Vec<f64>], n: usize, target: &[Vec<f64>]) -> CltResult {
    let w = xs.len();
    let d = target.len();
    let wf = w as f64;
    let sq = (n as f64).sqrt();
    let scaled: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| v / sq).collect()).collect();
    let mean: Vec<f64> = (0..d).map(|k| scaled.iter().map(|x| x[k]).sum::<f64>() / wf).collect();
    let cov_of = |rows: &[Vec<f64>]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let m: Vec<f64> = (0..d).map(|k| rows.iter().map(|x| x[k]).sum::<f64>() / wf).collect();
        let mut cov = vec![vec![0.0; d]; d];
        let mut se = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..d {
                let prods: Vec<f64> = rows.iter().map(|x| (x[i] - m[i]) * (x[j] - m[j])).collect();
                let c = prods.iter().sum::<f64>() / (wf - 1.0);
                let var = prods.iter().map(|p| (p - c).powi(2)).sum::<f64>() / (wf - 1.0);
                cov[i][j] = c;
                se[i][j] = (var / wf).sqrt();
            }
        }
        (cov, se)
    };
    let (empirical_cov, std_errors) = cov_of(&scaled);
    let mean_se: Vec<f64> = (0..d).map(|k| (empirical_cov[k][k] / wf).sqrt()).collect();
    let mart: Vec<Vec<f64>> = scaled
        .iter()
        .zip(chis)
        .map(|(x, c)| x.iter().zip(c).map(|(a, b)| a + b / sq).collect())
        .collect();
    let (martingale_cov, _) = cov_of(&mart);
    let martingale_mean: Vec<f64> = (0..d).map(|k| mart.iter().map(|x| x[k]).sum::<f64>() / wf).collect();
    let chi_scaled: Vec<Vec<f64>> = chis.iter().map(|c| c.iter().map(|v| v / sq).collect()).collect();
    let (chi_cov, _) = cov_of(&chi_scaled);
    let tr = |m: &Vec<Vec<f64>>| (0..d).map(|k| m[k][k]).sum::<f64>();
    let z_scores = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (empirical_cov[i][j] - target[i][j]) / std_errors[i][j])
                .collect()
        })
        .collect();
    CltResult {
        n,
        walkers: w,
        mean_drift: mean.iter().map(|m| m / sq).collect(),
        mean,
        mean_se,
        corrector_share: tr(&chi_cov) / tr(&empirical_cov),
        empirical_cov,
        std_errors,
        target_a: target.to_vec(),
        z_scores,
        martingale_cov,
        martingale_mean,
    }
}

/// Walker `w` of an experiment seeded with `seed` uses the stream `mix(seed, [w])`.
pub fn walker_seed(seed: u64, walker: u64) -> u64 {
    mix(seed, &[walker])
}

/// Quenched CLT from the origin, recording statistics at each checkpoint
/// (ascending). Walkers continue the same stream across checkpoints.
pub fn clt_checkpoints(
    env: &Environment,
    corrector: &CorrectorField,
    target_a: &[Vec<f64>],
    checkpoints: &[usize],
    walkers: usize,
    seed: u64,
) -> Result<Vec<CltResult>> {
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    if walkers < 100 {
        return Err(Error::Parameter(format!("need at least 100 walkers, got {walkers}")));
    }
    let sampler = StepSampler::new(env)?;
    let d = env.dim();
    let ends: Vec<Vec<(Vec<i64>, usize)>> = (0..walkers as u64)
        .into_par_iter()
        .map(|w| {
            let stream = walker_seed(seed, w);
            let mut site = 0usize;
            let mut pos = vec![0i64; d];
            let mut done = 0usize;
            checkpoints
                .iter()
                .map(|&c| {
                    sampler.run(&mut site, &mut pos, c - done, stream, done as u64);
                    done = c;
                    (pos.clone(), site)
                })
                .collect()
        })
        .collect();
    Ok(checkpoints
        .iter()
        .enumerate()
        .map(|(ci, &n)| {
            let xs: Vec<Vec<f64>> = ends
                .iter()
                .map(|e| e[ci].0.iter().map(|&v| v as f64).collect())
                .collect();
            let chis: Vec<Vec<f64>> = ends
                .iter()
                .map(|e| (0..d).map(|k| corrector.chi[k][e[ci].1]).collect())
                .collect();
            summarize(&xs, &chis, n, target_a)
        })
        .collect())
}

pub fn quenched_clt_experiment(
    env: &Environment,
    corrector: &CorrectorField,
    target_a: &[Vec<f64>],
    n: usize,
    walkers: usize,
    seed: u64,
) -> Result<CltResult> {
    Ok(clt_checkpoints(env, corrector, target_a, &[n], walkers, seed)?.remove(0))
}

/// `KL(ν_n ‖ π/Σπ)` for the occupation measure `ν_n` of one walk from the
/// origin, at each horizon in `horizons` (ascending).
pub fn occupation_kl(env: &Environment, horizons: &[usize], stream_seed: u64) -> Result<Vec<f64>> {
    let sampler = StepSampler::new(env)?;
    let n_max = *horizons
        .iter()
        .max()
        .ok_or_else(|| Error::Parameter("no horizons".into()))?;
    let path = walk_with(&sampler, env, 0, n_max, stream_seed);
    let k = assemble_kernel(env)?;
    let total: f64 = k.pi().iter().sum();
    let target: Vec<f64> = k.pi().iter().map(|p| p / total).collect();
    Ok(horizons
        .iter()
        .map(|&h| {
            let mut counts = vec![0usize; env.num_sites()];
            for &s in &path.sites[1..=h] {
                counts[s] += 1;
            }
            counts
                .iter()
                .zip(&target)
                .filter(|(c, _)| **c > 0)
                .map(|(&c, &t)| {
                    let p = c as f64 / h as f64;
                    p * (p / t).ln()
                })
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianProfile {
    pub n: usize,
    /// Smallest `C₀` with `P_0(X_n = y) ≤ C₀ n^{-d/2} exp(-‖y‖²/(C₀ n))` for all `y`.
    pub c0: f64,
    /// `(‖y‖², max P_0(X_n = y))` per squared torus distance from the origin.
    pub profile: Vec<(i64, f64)>,
    pub saturated: bool,
}

/// Exact `n`-step law from the origin by propagation, and the smallest Gaussian
/// constant it admits.
pub fn empirical_gaussian_check(env: &Environment, n: usize) -> Result<GaussianProfile> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let k = assemble_kernel(env)?;
    let torus = env.torus();
    let mut mu = vec![0.0; k.num_sites()];
    mu[0] = 1.0;
    for _ in 0..n {
        mu = k.apply_left(&mu);
    }
    let total: f64 = k.pi().iter().sum();
    let eq = kernel_period(&k) as f64 / total;
    let sup = mu.iter().zip(k.pi()).map(|(m, p)| m / p).fold(0.0, f64::max);
    let mut by_r2: std::collections::BTreeMap<i64, f64> = Default::default();
    for (y, &p) in mu.iter().enumerate() {
        let e = by_r2.entry(torus.dist2_sq(0, y)).or_insert(0.0);
        *e = e.max(p);
    }
    let d = env.dim() as f64;
    let nf = n as f64;
    let mut c0: f64 = 0.0;
    for (&r2, &p) in &by_r2 {
        if p > 0.0 {
            c0 = c0.max(smallest_constant(p, nf, r2 as f64, d));
        }
    }
    Ok(GaussianProfile {
        n,
        c0,
        profile: by_r2.into_iter().collect(),
        saturated: sup <= 1.1 * eq,
    })
}

fn smallest_constant(p: f64, n: f64, r2: f64, d: f64) -> f64 {
    let target = p.ln() + d / 2.0 * n.ln();
    let g = |lc: f64| lc - r2 / (lc.exp() * n) - target;
    let (mut lo, mut hi) = (-60.0f64, 60.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi.exp()
}

/// Ascending eigenvalues of an empirical covariance.
pub fn covariance_eigenvalues(c: &[Vec<f64>]) -> Vec<f64> {
    symmetric_eigenvalues(c)
}
