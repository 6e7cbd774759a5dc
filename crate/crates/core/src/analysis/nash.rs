use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::assumption_a1::{assumption_a1_check, A1Outcome};
use super::dirichlet::sparse_energy;
use super::kernel::TorusKernel;
use crate::error::{Error, Result};
use crate::lattice::{box_points, linf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NashCertificate {
    pub m: usize,
    /// Empirical Nash constant: the smallest ratio seen.
    pub kappa: f64,
    /// `min_f E(f, f) / (‖f‖₂^{2+4/d} ‖f‖₁^{-4/d})` over the probed functions.
    pub worst_ratio: f64,
    /// Which family produced the minimum.
    pub worst_family: String,
    pub functions_tested: usize,
    /// `(K, δ)` for which the symmetrized kernel satisfies the local connectivity condition, if any.
    pub a1_params: Option<(usize, f64)>,
}

/// `E(f, f) / (‖f‖_{L²(π)}^{2+4/d} ‖f‖_{L¹(π)}^{-4/d})` for sparse `f`.
pub fn nash_ratio(k: &TorusKernel, f: &[(usize, f64)]) -> f64 {
    let mut dense = vec![0.0; k.num_sites()];
    nash_ratio_with(k, f, &mut dense)
}

fn nash_ratio_with(k: &TorusKernel, f: &[(usize, f64)], dense: &mut [f64]) -> f64 {
    let d = k.torus().dim as f64;
    let pi = k.pi();
    let l2sq: f64 = f.iter().map(|&(x, v)| pi[x] * v * v).sum();
    let l1: f64 = f.iter().map(|&(x, v)| pi[x] * v.abs()).sum();
    let e = sparse_energy(k, f, dense);
    e / (l2sq.powf(1.0 + 2.0 / d) * l1.powf(-4.0 / d))
}

fn tent(k: &TorusKernel, center: usize, r: i64) -> Vec<(usize, f64)> {
    let t = k.torus();
    box_points(t.dim, r - 1)
        .into_iter()
        .map(|o| (t.shift(center, &o), (r - linf(&o)) as f64))
        .collect()
}

/// Scan the Nash ratio of `(Q^m)^* Q^m` over single-site indicators, box
/// tents and `trials` random sparse functions.
///
/// Supports are kept within radius `side / 4` so no test function wraps.
pub fn nash_estimate(q: &TorusKernel, m: usize, trials: usize, seed: u64) -> Result<NashCertificate> {
    if m == 0 || trials == 0 {
        return Err(Error::Parameter("nash_estimate needs m ≥ 1 and trials ≥ 1".into()));
    }
    let k = q.symmetrized_power(m)?;
    let t = k.torus();
    let n = k.num_sites();
    let r_max = (t.side / 4).max(1) as i64;
    let mut dense = vec![0.0; n];
    let mut worst = (f64::INFINITY, String::new());
    let mut tested = 0usize;
    let mut consider = |f: &[(usize, f64)], family: &str, worst: &mut (f64, String)| {
        let r = nash_ratio_with(&k, f, &mut dense);
        if r < worst.0 {
            *worst = (r, family.to_string());
        }
    };

    for x in 0..n {
        consider(&[(x, 1.0)], "indicator", &mut worst);
        tested += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<usize> = (0..8).map(|_| rng.random_range(0..n)).collect();
    let mut r = 1;
    while r <= r_max {
        for &c in &centers {
            consider(&tent(&k, c, r), "tent", &mut worst);
            tested += 1;
        }
        r *= 2;
    }
    for _ in 0..trials {
        let c = rng.random_range(0..n);
        let radius = rng.random_range(0..=r_max);
        let fill: f64 = rng.random_range(0.1..=1.0);
        let mut f: Vec<(usize, f64)> = Vec::new();
        for o in box_points(t.dim, radius) {
            if rng.random::<f64>() < fill {
                f.push((t.shift(c, &o), rng.sample::<f64, _>(StandardNormal)));
            }
        }
        if f.is_empty() || f.iter().all(|&(_, v)| v == 0.0) {
            continue;
        }
        consider(&f, "random", &mut worst);
        tested += 1;
    }

    let mut a1_params = None;
    let mut big_k = 1usize;
    while t.side > 2 * (3 * big_k + 1) {
        let out: A1Outcome = assumption_a1_check(&k, big_k, f64::MIN_POSITIVE)?;
        if out.holds {
            a1_params = Some((big_k, out.best_delta));
            break;
        }
        big_k += 1;
    }

    Ok(NashCertificate {
        m,
        kappa: worst.0,
        worst_ratio: worst.0,
        worst_family: worst.1,
        functions_tested: tested,
        a1_params,
    })
}

/// Outcome of iterating the worst case of `u_{n+1} ≤ u_n (1 - κ u_n^{2/d})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionCheck {
    pub c0: f64,
    pub holds: bool,
    /// First `n` where `u_n > C₀ n^{-d/2}`, if any.
    pub first_violation: Option<usize>,
    pub max_ratio: f64,
}

/// Pick `C₀` with `u₁ ≤ C₀` and `1 - κ C₀^{2/d}/(n+1) ≤ (n/(n+1))^{d/2}` for all
/// `n ≥ 1`, then verify `u_n ≤ C₀ n^{-d/2}` along the extremal recursion.
pub fn nash_recursion_check(u1: f64, kappa: f64, d: usize, n_max: usize) -> Result<RecursionCheck> {
    if !(u1 > 0.0 && kappa > 0.0) || d == 0 {
        return Err(Error::Parameter(format!(
            "need u1 > 0, κ > 0, d ≥ 1; got u1={u1}, κ={kappa}, d={d}"
        )));
    }
    let df = d as f64;
    if kappa * u1.powf(2.0 / df) >= 1.0 {
        return Err(Error::Parameter(format!(
            "κ u1^(2/d) = {} ≥ 1 makes the recursion nonpositive",
            kappa * u1.powf(2.0 / df)
        )));
    }
    // (n+1)(1 - (n/(n+1))^{d/2}) increases to d/2 for d ≥ 2; scan for d = 1.
    let need = (1..=n_max.max(1))
        .map(|n| {
            let r = n as f64 / (n as f64 + 1.0);
            if d % 2 == 0 {
                (0..d / 2).map(|j| r.powi(j as i32)).sum()
            } else {
                (n as f64 + 1.0) * (1.0 - r.powf(df / 2.0))
            }
        })
        .fold(df / 2.0, f64::max);
    let c0 = u1.max((need / kappa).powf(df / 2.0));

    let mut u = u1;
    let mut max_ratio: f64 = 0.0;
    let mut first_violation = None;
    for n in 1..=n_max {
        let bound = c0 / (n as f64).powf(df / 2.0);
        max_ratio = max_ratio.max(u / bound);
        if u > bound * (1.0 + 1e-12) && first_violation.is_none() {
            first_violation = Some(n);
        }
        u *= 1.0 - kappa * u.powf(2.0 / df);
    }
    Ok(RecursionCheck {
        c0,
        holds: first_violation.is_none(),
        first_violation,
        max_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::assemble_kernel;
    use crate::env::{build_environment, random_conductance};

    #[test]
    fn recursion_in_two_dimensions() {
        let r = nash_recursion_check(1.0, 0.1, 2, 10_000).unwrap();
        assert_eq!(r.c0, 10.0);
        assert!(r.holds);
    }

    #[test]
    fn recursion_in_three_dimensions() {
        let r = nash_recursion_check(1.0, 0.1, 3, 10_000).unwrap();
        // κ C₀^{2/3} ≥ 3/2
        assert!((r.c0 - 15f64.powf(1.5)).abs() < 1e-9);
        assert!(r.holds && r.max_ratio <= 1.0);
    }

    #[test]
    fn recursion_rejects_large_kappa() {
        assert!(nash_recursion_check(1.0, 1.0, 2, 10).is_err());
        assert!(nash_recursion_check(0.0, 0.1, 2, 10).is_err());
    }

    #[test]
    fn indicator_ratio_closed_form() {
        let env = build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 16, 0).unwrap();
        let k = assemble_kernel(&env).unwrap().symmetrized_power(1).unwrap();
        // E(1_x) = π(x)(1 - K(x,x)); ‖1_x‖₂² = ‖1_x‖₁ = π(x)
        let x = 17;
        let direct = k.pi()[x] * (1.0 - k.get(x, x)) / (k.pi()[x].powf(2.0) * k.pi()[x].powf(-2.0));
        assert!((nash_ratio(&k, &[(x, 1.0)]) - direct).abs() < 1e-12);
        assert!((direct - 3.0).abs() < 1e-12);
    }

    #[test]
    fn estimate_is_positive_and_covers_near_constants() {
        let env = build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 16, 0).unwrap();
        let q = assemble_kernel(&env).unwrap();
        let cert = nash_estimate(&q, 1, 50, 9).unwrap();
        assert!(cert.kappa > 0.0 && cert.kappa <= cert.worst_ratio);
        let k = q.symmetrized_power(1).unwrap();
        let t = k.torus();
        let block: Vec<(usize, f64)> = box_points(2, 3).into_iter().map(|o| (t.shift(0, &o), 1.0)).collect();
        assert!(nash_ratio(&k, &block) >= cert.kappa);
    }

    #[test]
    fn parameters_validated() {
        let env = build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 8, 0).unwrap();
        let q = assemble_kernel(&env).unwrap();
        assert!(nash_estimate(&q, 0, 1, 0).is_err());
        assert!(nash_estimate(&q, 1, 0, 0).is_err());
    }
}
