use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::environment::Environment;
use super::steps::SiteLaws;
use crate::error::{Error, Result};
use crate::lattice::{add, unit_vectors, Point};

/// Outcome of the strong-irreducibility probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Irreducibility {
    /// Every site reaches each neighbour `x ± e_k` through at most `n` steps,
    /// each of probability at least `eps0`.
    Certified { eps0: f64, n: usize },
    /// No such path of length `≤ probe_n` from `site` to `site + direction`.
    Failed {
        site: Point,
        direction: Point,
        probe_n: usize,
        eps0: f64,
    },
}

/// Sampled check of the standing assumptions on one environment.
///
/// Certification is per environment, not uniform over all environments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// Observed `[min M, max M]` over the torus.
    pub mass_bounds: [f64; 2],
    pub irreducibility: Irreducibility,
    /// Largest ℓ∞ norm of a step in `Λ`.
    pub range_bound: i64,
    /// `min_x min_{z ∈ Λ} p_z(T_x ω)`; positive iff the walk is uniformly
    /// elliptic on this sample.
    pub ellipticity: f64,
    pub mass_bounded: bool,
    pub irreducible: bool,
    pub passed: bool,
}

impl ValidationReport {
    pub fn certified_n(&self) -> Option<usize> {
        match self.irreducibility {
            Irreducibility::Certified { n, .. } => Some(n),
            Irreducibility::Failed { .. } => None,
        }
    }
}

/// Scan every site: record the range of `M`, and for each unit vector `e`
/// search for a path to `x + e` of length `≤ probe_n` whose every step has
/// probability `≥ probe_eps`.
pub fn validate_assumptions(env: &Environment, probe_n: usize, probe_eps: f64) -> Result<ValidationReport> {
    if probe_n == 0 {
        return Err(Error::Parameter("probe_n must be at least 1".into()));
    }
    if !(probe_eps > 0.0) {
        return Err(Error::Parameter(format!("probe_eps must be positive, got {probe_eps}")));
    }
    let torus = env.torus();
    let n_sites = env.num_sites();

    // Zero mass is a failed assumption, reported rather than raised.
    let laws = match SiteLaws::new(env) {
        Ok(l) => l,
        Err(_) => {
            let range = env.model().range_set();
            return Ok(ValidationReport {
                mass_bounds: [0.0, f64::NAN],
                irreducibility: Irreducibility::Failed {
                    site: vec![0; env.dim()],
                    direction: vec![0; env.dim()],
                    probe_n,
                    eps0: probe_eps,
                },
                range_bound: range.bound,
                ellipticity: 0.0,
                mass_bounded: false,
                irreducible: false,
                passed: false,
            });
        }
    };
    let min_m = laws.mass.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_m = laws.mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ellipticity = laws
        .probs
        .iter()
        .flat_map(|row| row.iter().cloned())
        .fold(f64::INFINITY, f64::min);

    let strong: Vec<Vec<usize>> = laws
        .probs
        .iter()
        .map(|row| (0..row.len()).filter(|&s| row[s] >= probe_eps).collect())
        .collect();
    let units = unit_vectors(env.dim());

    let mut worst = 0usize;
    for x in 0..n_sites {
        // Breadth-first over unwrapped displacements from x.
        let origin = vec![0i64; env.dim()];
        let mut seen: HashSet<Point> = HashSet::from([origin.clone()]);
        let mut frontier = vec![origin];
        let mut found: Vec<Option<usize>> = vec![None; units.len()];
        for depth in 1..=probe_n {
            let mut next = Vec::new();
            for disp in &frontier {
                let site = torus.shift(x, disp);
                for &s in &strong[site] {
                    let nd = add(disp, &laws.range.steps[s]);
                    if let Some(k) = units.iter().position(|e| *e == nd) {
                        found[k].get_or_insert(depth);
                    }
                    if seen.insert(nd.clone()) {
                        next.push(nd);
                    }
                }
            }
            if found.iter().all(Option::is_some) {
                break;
            }
            frontier = next;
        }
        if let Some(k) = found.iter().position(Option::is_none) {
            return Ok(ValidationReport {
                mass_bounds: [min_m, max_m],
                irreducibility: Irreducibility::Failed {
                    site: torus.coords(x),
                    direction: units[k].clone(),
                    probe_n,
                    eps0: probe_eps,
                },
                range_bound: laws.range.bound,
                ellipticity,
                mass_bounded: min_m > 0.0,
                irreducible: false,
                passed: false,
            });
        }
        worst = worst.max(found.iter().map(|d| d.unwrap()).max().unwrap());
    }
    Ok(ValidationReport {
        mass_bounds: [min_m, max_m],
        irreducibility: Irreducibility::Certified {
            eps0: probe_eps,
            n: worst,
        },
        range_bound: laws.range.bound,
        ellipticity,
        mass_bounded: min_m > 0.0,
        irreducible: true,
        passed: min_m > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::environment::build_environment;
    use crate::env::model::{random_conductance, square_triangle, triangle_triangle, uniformly_elliptic};

    #[test]
    fn square_triangle_needs_two_steps() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap();
        let r = validate_assumptions(&env, 2, 0.2).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.certified_n(), Some(2));
        assert_eq!(r.mass_bounds, [3.0, 4.0]);
        assert_eq!(r.range_bound, 1);
        // not uniformly elliptic: some step of Λ is missing somewhere
        assert_eq!(r.ellipticity, 0.0);
        let one = validate_assumptions(&env, 1, 0.2).unwrap();
        assert!(!one.irreducible);
    }

    #[test]
    fn uniformly_elliptic_certifies_in_one_step() {
        let env = build_environment(&uniformly_elliptic(0.5, 1.5).unwrap(), 12, 3).unwrap();
        let r = validate_assumptions(&env, 1, 0.05).unwrap();
        assert!(r.passed);
        assert_eq!(r.certified_n(), Some(1));
        assert!(r.ellipticity > 0.05);
        let rc = build_environment(&random_conductance(2, 0.5, 1.5).unwrap(), 12, 3).unwrap();
        assert_eq!(validate_assumptions(&rc, 1, 0.05).unwrap().certified_n(), Some(1));
    }

    #[test]
    fn triangle_triangle_has_corridors() {
        let failures = (0..10u64)
            .filter(|&seed| {
                let env = build_environment(&triangle_triangle(0.5).unwrap(), 16, seed).unwrap();
                !validate_assumptions(&env, 8, 0.2).unwrap().irreducible
            })
            .count();
        assert!(failures >= 1);
    }

    #[test]
    fn bad_parameters() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 8, 1).unwrap();
        assert!(validate_assumptions(&env, 0, 0.1).is_err());
        assert!(validate_assumptions(&env, 2, 0.0).is_err());
    }

    #[test]
    fn zero_mass_reported_not_raised() {
        let env = build_environment(&random_conductance(2, 0.0, 0.0).unwrap(), 4, 0).unwrap();
        let r = validate_assumptions(&env, 2, 0.1).unwrap();
        assert!(!r.passed && !r.mass_bounded);
    }
}
