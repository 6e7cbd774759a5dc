use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::{assemble_kernel, TorusKernel};
use crate::env::{Environment, SiteLaws};
use crate::error::Result;
use crate::lattice::Point;

/// The environment seen from the walker, realized on the torus orbit of `ω`:
/// site `x` stands for `T_x ω`.
///
/// `r` acts on site functions by `Rf(x) = Σ_z f(x + z) p_z(T_x ω)`; `r_star`
/// is the same operator built from the reversed cycles.
#[derive(Debug, Clone)]
pub struct EnvChain {
    env: Environment,
    r: TorusKernel,
    r_star: TorusKernel,
    q: Vec<f64>,
    z: f64,
    steps: Vec<Point>,
    probs: Vec<Vec<f64>>,
    nbr: Vec<Vec<usize>>,
}

pub fn build_env_chain(env: &Environment) -> Result<EnvChain> {
    let laws = SiteLaws::new(env)?;
    let r = assemble_kernel(env)?;
    let r_star = assemble_kernel(&env.reversed())?;
    let z: f64 = laws.mass.iter().sum();
    let q = laws.mass.iter().map(|m| m / z).collect();
    let torus = env.torus();
    let nbr = (0..env.num_sites())
        .map(|x| laws.range.steps.iter().map(|s| torus.shift(x, s)).collect())
        .collect();
    Ok(EnvChain {
        env: env.clone(),
        r,
        r_star,
        q,
        z,
        steps: laws.range.steps,
        probs: laws.probs,
        nbr,
    })
}

impl EnvChain {
    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn dim(&self) -> usize {
        self.env.dim()
    }

    pub fn num_sites(&self) -> usize {
        self.q.len()
    }

    pub fn r(&self) -> &TorusKernel {
        &self.r
    }

    pub fn r_star(&self) -> &TorusKernel {
        &self.r_star
    }

    /// `ℚ(x) = M(T_x ω) / Z`.
    pub fn q_measure(&self) -> &[f64] {
        &self.q
    }

    /// `Z = Σ_x M(T_x ω)`.
    pub fn normalizer(&self) -> f64 {
        self.z
    }

    /// Range set `Λ` in a fixed order.
    pub fn steps(&self) -> &[Point] {
        &self.steps
    }

    /// `p_{Λ_s}(T_x ω)`, dense over the range set.
    pub fn probs(&self, x: usize) -> &[f64] {
        &self.probs[x]
    }

    /// Torus site `x + Λ_s`.
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.nbr[x]
    }

    pub fn apply_r(&self, f: &[f64]) -> Vec<f64> {
        self.r.apply(f)
    }

    pub fn apply_r_star(&self, f: &[f64]) -> Vec<f64> {
        self.r_star.apply(f)
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.q.iter().zip(f).zip(g).map(|((q, a), b)| q * a * b).sum()
    }

    pub fn mean(&self, f: &[f64]) -> f64 {
        self.q.iter().zip(f).map(|(q, a)| q * a).sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// `⟨f, (-L) g⟩_ℚ` with `L = R - I`.
    pub fn energy(&self, f: &[f64], g: &[f64]) -> f64 {
        let rg = self.apply_r(g);
        self.q
            .iter()
            .zip(f)
            .zip(g.iter().zip(&rg))
            .map(|((q, a), (b, c))| q * a * (b - c))
            .sum()
    }

    /// `max_x |(ℚR)(x) - ℚ(x)|` and the same for `R*`.
    pub fn invariance_residuals(&self) -> (f64, f64) {
        let res = |k: &TorusKernel| {
            k.apply_left(&self.q)
                .iter()
                .zip(&self.q)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        (res(&self.r), res(&self.r_star))
    }

    /// `∫ Σ_z (f∘T_z - f)² p_z dℚ`, which equals `2 ⟨f, (-L) f⟩_ℚ`.
    pub fn increment_energy(&self, f: &[f64]) -> f64 {
        (0..self.num_sites())
            .map(|x| {
                let s: f64 = self.nbr[x]
                    .iter()
                    .zip(&self.probs[x])
                    .map(|(&y, &p)| p * (f[y] - f[x]).powi(2))
                    .sum();
                self.q[x] * s
            })
            .sum()
    }

    /// `½ ∫ M⁻¹ Σ_i Σ_j (f(T_{z_{i,j}} ω) - f(T_{z_{i,j-1}} ω))² W_i dℚ`, summed
    /// cycle by cycle over the translates; equals `⟨f, (-L) f⟩_ℚ`.
    pub fn cycle_energy(&self, f: &[f64]) -> f64 {
        let torus = self.env.torus();
        let mut total = 0.0;
        for (i, c) in self.env.model().cycles().iter().enumerate() {
            for y in 0..self.num_sites() {
                let w = self.env.weight(i, y);
                if w == 0.0 {
                    continue;
                }
                let s: f64 = c
                    .edges()
                    .map(|(a, b)| (f[torus.shift(y, b)] - f[torus.shift(y, a)]).powi(2))
                    .sum();
                total += w * s;
            }
        }
        0.5 * total / self.z
    }
}

/// Per-site local drift, stored component-major: `d0[k][x] = ⟨d₀(T_x ω), e_k⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftField {
    pub d0: Vec<Vec<f64>>,
}

impl DriftField {
    pub fn at(&self, x: usize) -> Vec<f64> {
        self.d0.iter().map(|c| c[x]).collect()
    }

    /// `max_x ‖d₀(T_x ω)‖∞`.
    pub fn sup_norm(&self) -> f64 {
        self.d0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ_x M(T_x ω) d₀(T_x ω)`, the unnormalized ℚ-mean.
    pub fn weighted_sum(&self, chain: &EnvChain) -> Vec<f64> {
        self.d0.iter().map(|c| chain.mean(c) * chain.normalizer()).collect()
    }
}

pub fn local_drift(chain: &EnvChain) -> DriftField {
    let d = chain.dim();
    let n = chain.num_sites();
    let mut d0 = vec![vec![0.0; n]; d];
    for x in 0..n {
        for (z, &p) in chain.steps.iter().zip(&chain.probs[x]) {
            for k in 0..d {
                d0[k][x] += z[k] as f64 * p;
            }
        }
    }
    DriftField { d0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjointCheck {
    /// `max |⟨R* f, g⟩_ℚ - ⟨f, R g⟩_ℚ|` over the sampled pairs.
    pub max_residual: f64,
    /// `max |∫ Rf dℚ - ∫ f dℚ|` over the sampled functions.
    pub max_invariance_residual: f64,
    pub trials: usize,
    pub seed: u64,
}

/// `⟨R* f, g⟩_ℚ = ⟨f, R g⟩_ℚ` over `trials` standard normal pairs.
pub fn adjoint_identity_check(chain: &EnvChain, trials: usize, seed: u64) -> AdjointCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = chain.num_sites();
    let mut max_residual: f64 = 0.0;
    let mut max_inv: f64 = 0.0;
    for _ in 0..trials {
        let f: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let lhs = chain.inner(&chain.apply_r_star(&f), &g);
        let rhs = chain.inner(&f, &chain.apply_r(&g));
        max_residual = max_residual.max((lhs - rhs).abs());
        max_inv = max_inv.max((chain.mean(&chain.apply_r(&f)) - chain.mean(&f)).abs());
    }
    AdjointCheck {
        max_residual,
        max_invariance_residual: max_inv,
        trials,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_environment, mass_at, random_conductance, square_triangle, uniformly_elliptic};

    fn st() -> EnvChain {
        build_env_chain(&build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap()).unwrap()
    }

    fn conductance() -> EnvChain {
        build_env_chain(&build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 8, 0).unwrap()).unwrap()
    }

    #[test]
    fn constant_conductance_is_reversible_for_uniform_q() {
        let c = conductance();
        assert!(c.q_measure().iter().all(|&q| q == 1.0 / 64.0));
        assert_eq!(c.r(), c.r_star());
        let ones = vec![1.0; 64];
        assert_eq!(c.apply_r(&ones), ones);
        let mut f = vec![0.0; 64];
        f[3] = 1.0;
        let mut g = vec![0.0; 64];
        g[4] = 1.0;
        let res = (c.inner(&c.apply_r_star(&f), &g) - c.inner(&f, &c.apply_r(&g))).abs();
        assert!(res < 1e-12);
        assert!(local_drift(&c).sup_norm() == 0.0);
    }

    #[test]
    fn q_is_mass_over_normalizer() {
        let c = st();
        let torus = c.env().torus();
        for x in 0..c.num_sites() {
            let w = c.env().weight(0, torus.shift(x, &[0, -1]));
            assert!((c.q_measure()[x] * c.normalizer() - (3.0 + w)).abs() < 1e-12);
            assert!((c.q_measure()[x] * c.normalizer() - mass_at(c.env(), x).unwrap()).abs() < 1e-12);
        }
        assert!((c.q_measure().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (a, b) = c.invariance_residuals();
        assert!(a < 1e-12 && b < 1e-12);
    }

    #[test]
    fn adjoint_identity_on_random_pairs() {
        let chk = adjoint_identity_check(&st(), 100, 3);
        assert!(chk.max_residual < 1e-10 && chk.max_invariance_residual < 1e-12);
        let c = st();
        let ones = vec![2.0; c.num_sites()];
        let lhs = c.inner(&c.apply_r_star(&ones), &ones);
        assert!((lhs - 4.0).abs() < 1e-12);
    }

    #[test]
    fn drift_balances_and_vanishes_under_full_square_cover() {
        let c = st();
        let d = local_drift(&c);
        assert!(d.weighted_sum(&c).iter().all(|v| v.abs() < 1e-12));
        assert!(d.sup_norm() > 0.0);
        // a site covered only by squares (all four square weights 1) has zero drift
        let env = c.env();
        let torus = env.torus();
        let offsets = [[0, 0], [-1, 0], [-1, -1], [0, -1]];
        let site = (0..c.num_sites())
            .find(|&x| offsets.iter().all(|o| env.weight(0, torus.shift(x, o)) == 1.0))
            .expect("some site sees only squares");
        assert!(d.at(site).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn energy_identities() {
        for c in [
            st(),
            build_env_chain(&build_environment(&uniformly_elliptic(0.5, 1.5).unwrap(), 12, 2).unwrap()).unwrap(),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let f: Vec<f64> = (0..c.num_sites()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let e = c.energy(&f, &f);
            assert!((c.increment_energy(&f) - 2.0 * e).abs() < 1e-12 * e.abs().max(1.0));
            assert!((c.cycle_energy(&f) - e).abs() < 1e-10);
        }
    }
}
