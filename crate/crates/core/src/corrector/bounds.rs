use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::chain::{DriftField, EnvChain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub max_ratio: f64,
    pub bound: f64,
    pub violations: usize,
    pub tested: usize,
    /// Pairs or functions with zero energy, left out of the ratio.
    pub skipped: usize,
    pub seed: u64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

fn normal_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `⟨f, (-L) g⟩²_ℚ / (⟨f, (-L) f⟩_ℚ ⟨g, (-L) g⟩_ℚ)` over `trials` standard
/// normal pairs and every pair of indicators `(1_x, 1_{x+z})`, `z ∈ Λ`.
pub fn sector_condition_check(chain: &EnvChain, trials: usize, seed: u64) -> BoundCheck {
    let bound = chain.env().model().sector_constant();
    let n = chain.num_sites();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BoundCheck {
        max_ratio: 0.0,
        bound,
        violations: 0,
        tested: 0,
        skipped: 0,
        seed,
    };
    let record = |efg: f64, eff: f64, egg: f64, out: &mut BoundCheck| {
        if !(eff > 0.0 && egg > 0.0) {
            out.skipped += 1;
            return;
        }
        let r = efg * efg / (eff * egg);
        out.tested += 1;
        out.max_ratio = out.max_ratio.max(r);
        if r > bound * (1.0 + 1e-12) {
            out.violations += 1;
        }
    };
    for _ in 0..trials {
        let f = normal_field(&mut rng, n);
        let g = normal_field(&mut rng, n);
        record(
            chain.energy(&f, &g),
            chain.energy(&f, &f),
            chain.energy(&g, &g),
            &mut out,
        );
    }
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    for x in 0..n {
        for &y in chain.neighbors(x) {
            if y == x {
                continue;
            }
            f[x] = 1.0;
            g[y] = 1.0;
            record(
                chain.energy(&f, &g),
                chain.energy(&f, &f),
                chain.energy(&g, &g),
                &mut out,
            );
            f[x] = 0.0;
            g[y] = 0.0;
        }
    }
    out
}

/// `⟨⟨d₀, e⟩, f⟩²_ℚ / ⟨f, (-L) f⟩_ℚ` over `trials` standard normal `f`, plus
/// the maximizer `f = S⁻¹⟨d₀, e⟩` for the symmetric part `S` of `-L`, which
/// attains the supremum.
pub fn h_minus_one_check(
    chain: &EnvChain,
    drift: &DriftField,
    direction: &[f64],
    trials: usize,
    seed: u64,
) -> Result<BoundCheck> {
    if direction.len() != chain.dim() {
        return Err(Error::Parameter(format!(
            "direction has {} entries, expected {}",
            direction.len(),
            chain.dim()
        )));
    }
    let bound = chain.env().model().h_minus_one_constant();
    let n = chain.num_sites();
    let h: Vec<f64> = (0..n)
        .map(|x| drift.d0.iter().zip(direction).map(|(c, e)| c[x] * e).sum())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = BoundCheck {
        max_ratio: 0.0,
        bound,
        violations: 0,
        tested: 0,
        skipped: 0,
        seed,
    };
    let record = |f: &[f64], out: &mut BoundCheck| {
        let e = chain.energy(f, f);
        if !(e > 0.0) {
            out.skipped += 1;
            return;
        }
        let r = chain.inner(&h, f).powi(2) / e;
        out.tested += 1;
        out.max_ratio = out.max_ratio.max(r);
        if r > bound * (1.0 + 1e-12) {
            out.violations += 1;
        }
    };
    for _ in 0..trials {
        record(&normal_field(&mut rng, n), &mut out);
    }
    if h.iter().any(|&v| v != 0.0) {
        record(&symmetric_solve(chain, &h)?, &mut out);
    }
    Ok(out)
}

/// Solve `S f = h`, `S = I - (R + R*)/2`, by lazy iteration with mean deflation.
fn symmetric_solve(chain: &EnvChain, h: &[f64]) -> Result<Vec<f64>> {
    let n = h.len();
    let mut f = vec![0.0; n];
    let mut last = f64::INFINITY;
    for sweep in 1..=super::solve::MAX_SWEEPS {
        let a = chain.apply_r(&f);
        let b = chain.apply_r_star(&f);
        let s: Vec<f64> = (0..n).map(|x| 0.5 * (a[x] + b[x])).collect();
        if sweep % 8 == 0 {
            last = (0..n).map(|x| (f[x] - s[x] - h[x]).abs()).fold(0.0, f64::max);
            if last < 1e-12 {
                return Ok(f);
            }
        }
        for x in 0..n {
            f[x] = 0.5 * h[x] + 0.5 * (f[x] + s[x]);
        }
        let m = chain.mean(&f);
        f.iter_mut().for_each(|v| *v -= m);
    }
    Err(Error::Numerical {
        message: "symmetric Poisson iteration did not converge".into(),
        residual: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrector::{build_env_chain, local_drift};
    use crate::env::{build_environment, random_conductance, square_triangle};

    #[test]
    fn sector_on_square_triangle() {
        let c = build_env_chain(&build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap()).unwrap();
        let chk = sector_condition_check(&c, 1000, 11);
        assert_eq!(chk.bound, 64.0);
        assert!(chk.holds());
        assert!(chk.tested >= 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = normal_field(&mut rng, c.num_sites());
        let e = c.energy(&f, &f);
        assert!((e * e / (e * e) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sector_is_cauchy_schwarz_when_reversible() {
        let c = build_env_chain(&build_environment(&random_conductance(2, 1.0, 2.0).unwrap(), 8, 2).unwrap()).unwrap();
        let chk = sector_condition_check(&c, 200, 1);
        assert!(chk.max_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn h_minus_one_on_square_triangle() {
        let c = build_env_chain(&build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap()).unwrap();
        let d = local_drift(&c);
        // square and triangle both enter (0,0) along -e1 and leave it along +e1;
        // with W2 = 1 - W1 the horizontal drift cancels everywhere
        assert!(d.d0[0].iter().all(|&v| v == 0.0));
        let chk = h_minus_one_check(&c, &d, &[0.0, 1.0], 1000, 5).unwrap();
        assert_eq!(chk.bound, 8.0);
        assert!(chk.holds() && chk.max_ratio > 0.0, "{chk:?}");
    }

    #[test]
    fn h_minus_one_vanishes_without_drift() {
        let c = build_env_chain(&build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 8, 0).unwrap()).unwrap();
        let d = local_drift(&c);
        let chk = h_minus_one_check(&c, &d, &[0.0, 1.0], 50, 5).unwrap();
        assert_eq!(chk.max_ratio, 0.0);
        assert!(h_minus_one_check(&c, &d, &[1.0], 1, 0).is_err());
    }

    #[test]
    fn h_minus_one_with_translated_anchoring() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap();
        let shifted = env.with_model(env.model().translated(&[5, 5])).unwrap();
        let c = build_env_chain(&shifted).unwrap();
        let d = local_drift(&c);
        let chk = h_minus_one_check(&c, &d, &[0.0, 1.0], 200, 5).unwrap();
        assert!(chk.bound > 8.0 && chk.holds());
    }
}
