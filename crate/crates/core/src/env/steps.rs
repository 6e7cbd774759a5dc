use serde::{Deserialize, Serialize};

use super::environment::{cover_table, Cover, Environment};
use super::model::RangeSet;
use crate::error::{Error, Result};
use crate::lattice::Point;

/// Law of one step `z` of the walk leaving a site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDistribution {
    /// Steps with positive probability, in the order of the range set.
    pub support: Vec<Point>,
    pub probs: Vec<f64>,
}

impl StepDistribution {
    pub fn prob(&self, z: &[i64]) -> f64 {
        self.support
            .iter()
            .position(|s| s.as_slice() == z)
            .map_or(0.0, |k| self.probs[k])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mean displacement `Σ_z z p_z`.
    pub fn mean(&self) -> Vec<f64> {
        let d = self.support.first().map_or(0, Vec::len);
        let mut m = vec![0.0; d];
        for (z, p) in self.support.iter().zip(&self.probs) {
            for k in 0..d {
                m[k] += z[k] as f64 * p;
            }
        }
        m
    }
}

/// Per-site masses and step laws for a whole environment, computed once.
///
/// `probs[x][s]` is `p_{Λ_s}(T_x ω)`; entries are dense over the range set.
#[derive(Debug, Clone)]
pub struct SiteLaws {
    pub range: RangeSet,
    pub mass: Vec<f64>,
    pub probs: Vec<Vec<f64>>,
}

fn accumulate(env: &Environment, covers: &[Cover], site: usize, nsteps: usize) -> (f64, Vec<f64>) {
    let torus = env.torus();
    let mut mass = 0.0;
    let mut raw = vec![0.0; nsteps];
    for c in covers {
        let w = env.weight(c.cycle, torus.shift(site, &c.offset));
        mass += w;
        raw[c.step] += w;
    }
    (mass, raw)
}

fn zero_mass(env: &Environment, site: usize) -> Error {
    Error::Model(format!(
        "cycle mass M vanishes at site {:?}; the walk is undefined there",
        env.torus().coords(site)
    ))
}

/// `M(T_x ω) = Σ_i Σ_y W_i(T_y ω) 1{x ∈ C_i + y}`.
pub fn mass_at(env: &Environment, site: usize) -> Result<f64> {
    let range = env.model().range_set();
    let covers = cover_table(env.model(), &range);
    let (m, _) = accumulate(env, &covers, site, range.steps.len());
    if m > 0.0 {
        Ok(m)
    } else {
        Err(zero_mass(env, site))
    }
}

fn distribution(env: &Environment, site: usize) -> Result<StepDistribution> {
    let range = env.model().range_set();
    let covers = cover_table(env.model(), &range);
    let (m, raw) = accumulate(env, &covers, site, range.steps.len());
    if m <= 0.0 {
        return Err(zero_mass(env, site));
    }
    let (support, probs) = range
        .steps
        .iter()
        .zip(raw)
        .filter(|(_, w)| *w > 0.0)
        .map(|(z, w)| (z.clone(), w / m))
        .unzip();
    Ok(StepDistribution { support, probs })
}

/// `p_z(T_x ω)`, the law of the step taken from site `x`.
pub fn step_distribution(env: &Environment, site: usize) -> Result<StepDistribution> {
    distribution(env, site)
}

/// `p^*_z(T_x ω)`, built from the reversed cycles with the same weights.
pub fn step_distribution_reversed(env: &Environment, site: usize) -> Result<StepDistribution> {
    distribution(&env.reversed(), site)
}

impl SiteLaws {
    pub fn new(env: &Environment) -> Result<Self> {
        let range = env.model().range_set();
        let covers = cover_table(env.model(), &range);
        let n = env.num_sites();
        let mut mass = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        for site in 0..n {
            let (m, raw) = accumulate(env, &covers, site, range.steps.len());
            if m <= 0.0 {
                return Err(zero_mass(env, site));
            }
            mass.push(m);
            probs.push(raw.into_iter().map(|w| w / m).collect());
        }
        Ok(Self { range, mass, probs })
    }

    /// Local drift `Σ_z z p_z(T_x ω)`.
    pub fn drift(&self, site: usize) -> Vec<f64> {
        let d = self.range.steps.first().map_or(0, Vec::len);
        let mut m = vec![0.0; d];
        for (z, p) in self.range.steps.iter().zip(&self.probs[site]) {
            for k in 0..d {
                m[k] += z[k] as f64 * p;
            }
        }
        m
    }
}
