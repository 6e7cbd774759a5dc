use serde::{Deserialize, Serialize};

use crate::env::{Environment, SiteLaws};
use crate::error::{Error, Result};
use crate::lattice::Point;
use crate::rng::{splitmix64, unit_f64};

/// Inverse-CDF step sampler: for every site the positive-probability steps in
/// range-set order with their cumulative probabilities.
#[derive(Debug, Clone)]
pub struct StepSampler {
    dim: usize,
    steps: Vec<Point>,
    /// Per site: `(step index, cumulative probability)`, last entry forced to 1.
    cdf: Vec<Vec<(u8, f64)>>,
    /// Per site and step index: destination site.
    nbr: Vec<Vec<u32>>,
}

impl StepSampler {
    pub fn new(env: &Environment) -> Result<Self> {
        let laws = SiteLaws::new(env)?;
        let torus = env.torus();
        if laws.range.steps.len() > u8::MAX as usize {
            return Err(Error::Model("range set too large for the step sampler".into()));
        }
        let cdf = laws
            .probs
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                let mut out: Vec<(u8, f64)> = row
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(s, p)| {
                        acc += p;
                        (s as u8, acc)
                    })
                    .collect();
                out.last_mut().expect("every site has a step").1 = 1.0;
                out
            })
            .collect();
        let nbr = (0..env.num_sites())
            .map(|x| laws.range.steps.iter().map(|s| torus.shift(x, s) as u32).collect())
            .collect();
        Ok(Self {
            dim: env.dim(),
            steps: laws.range.steps,
            cdf,
            nbr,
        })
    }

    pub fn steps(&self) -> &[Point] {
        &self.steps
    }

    /// Step index drawn at `site` from a uniform variate `u ∈ [0, 1)`.
    #[inline]
    pub fn draw(&self, site: usize, u: f64) -> usize {
        let row = &self.cdf[site];
        for &(s, c) in row {
            if u < c {
                return s as usize;
            }
        }
        row[row.len() - 1].0 as usize
    }

    #[inline]
    pub fn next_site(&self, site: usize, step: usize) -> usize {
        self.nbr[site][step] as usize
    }

    /// Uniform variate for step `n` of the stream `key = splitmix64(stream_seed)`.
    #[inline]
    pub fn variate(key: u64, n: u64) -> f64 {
        unit_f64(splitmix64(key ^ n))
    }

    /// Run `n` steps from `site` at unwrapped position `pos`, updating both.
    pub fn run(&self, site: &mut usize, pos: &mut [i64], n: usize, stream_seed: u64, first_step: u64) {
        let key = splitmix64(stream_seed);
        for t in 0..n as u64 {
            let s = self.draw(*site, Self::variate(key, first_step + t));
            let z = &self.steps[s];
            for k in 0..self.dim {
                pos[k] += z[k];
            }
            *site = self.next_site(*site, s);
        }
    }
}

/// A walk on the unwrapped lattice together with its torus shadow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    pub start: usize,
    pub steps: Vec<Point>,
    /// Unwrapped positions `X_0 = coords(start), X_1, …, X_n`.
    pub positions: Vec<Point>,
    /// Torus sites of the positions.
    pub sites: Vec<usize>,
}

impl WalkPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Columns `t, x0..x{d-1}` of the rescaled path `β_N` at `t = k/N`.
    pub fn to_csv(&self, n: usize) -> Result<String> {
        use std::fmt::Write as _;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let vals = path_functional(self, n, &times)?;
        let d = self.positions[0].len();
        let mut s = String::from("t");
        for k in 0..d {
            write!(s, ",x{k}").unwrap();
        }
        s.push('\n');
        for (t, v) in times.iter().zip(vals) {
            write!(s, "{t}").unwrap();
            for c in v {
                write!(s, ",{c:.12e}").unwrap();
            }
            s.push('\n');
        }
        Ok(s)
    }
}

/// `n` steps from `start`, entirely determined by `(env, start, n, stream_seed)`.
pub fn simulate_walk(env: &Environment, start: usize, n: usize, stream_seed: u64) -> Result<WalkPath> {
    let sampler = StepSampler::new(env)?;
    Ok(walk_with(&sampler, env, start, n, stream_seed))
}

pub(crate) fn walk_with(
    sampler: &StepSampler,
    env: &Environment,
    start: usize,
    n: usize,
    stream_seed: u64,
) -> WalkPath {
    let torus = env.torus();
    let key = splitmix64(stream_seed);
    let mut site = start;
    let mut pos = torus.coords(start);
    let mut steps = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n + 1);
    let mut sites = Vec::with_capacity(n + 1);
    positions.push(pos.clone());
    sites.push(site);
    for t in 0..n as u64 {
        let s = sampler.draw(site, StepSampler::variate(key, t));
        let z = sampler.steps[s].clone();
        for (p, dz) in pos.iter_mut().zip(&z) {
            *p += dz;
        }
        site = sampler.next_site(site, s);
        steps.push(z);
        positions.push(pos.clone());
        sites.push(site);
    }
    WalkPath {
        start,
        steps,
        positions,
        sites,
    }
}

/// `β_N(t)`: linear interpolation of `k/N ↦ X_k/√N` (positions relative to `X_0`).
pub fn path_functional(path: &WalkPath, n: usize, times: &[f64]) -> Result<Vec<Vec<f64>>> {
    if n == 0 || path.len() < n {
        return Err(Error::Parameter(format!(
            "path of length {} cannot be rescaled at N = {n}",
            path.len()
        )));
    }
    let root = (n as f64).sqrt();
    let x0 = &path.positions[0];
    times
        .iter()
        .map(|&t| {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Parameter(format!("time {t} outside [0, 1]")));
            }
            let mut s = t * n as f64;
            if (s - s.round()).abs() < 1e-9 {
                s = s.round();
            }
            let k = (s.floor() as usize).min(n);
            let frac = s - k as f64;
            let a = &path.positions[k];
            Ok((0..x0.len())
                .map(|c| {
                    let base = (a[c] - x0[c]) as f64;
                    let v = if frac > 0.0 {
                        base + frac * (path.positions[k + 1][c] - a[c]) as f64
                    } else {
                        base
                    };
                    v / root
                })
                .collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Cycle;
    use crate::env::{
        build_environment, random_conductance, square_triangle, step_distribution, CycleModel, WeightLaw,
    };

    #[test]
    fn lazy_model_stays_put() {
        let m = CycleModel::new(
            1,
            vec![Cycle::new(vec![vec![0], vec![0]]).unwrap()],
            vec![WeightLaw::Constant { value: 1.0 }],
            None,
            vec![],
        )
        .unwrap();
        let env = build_environment(&m, 5, 0).unwrap();
        let p = simulate_walk(&env, 2, 50, 9).unwrap();
        assert!(p.positions.iter().all(|x| x == &vec![2]));
    }

    #[test]
    fn conductance_steps_are_unit() {
        let env = build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 8, 0).unwrap();
        let p = simulate_walk(&env, 0, 10_000, 3).unwrap();
        let t = env.torus();
        for (i, z) in p.steps.iter().enumerate() {
            assert_eq!(z.iter().map(|v| v.abs()).sum::<i64>(), 1);
            assert_eq!(crate::lattice::sub(&p.positions[i + 1], &p.positions[i]), *z);
            assert_eq!(t.index(&p.positions[i + 1]), p.sites[i + 1]);
        }
        assert_eq!(p, simulate_walk(&env, 0, 10_000, 3).unwrap());
        assert_ne!(p, simulate_walk(&env, 0, 10_000, 4).unwrap());
    }

    #[test]
    fn one_step_frequencies_match() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap();
        let s = StepSampler::new(&env).unwrap();
        let site = (0..env.num_sites())
            .max_by_key(|&x| step_distribution(&env, x).unwrap().support.len())
            .unwrap();
        let law = step_distribution(&env, site).unwrap();
        let n = 1_000_000u64;
        let key = splitmix64(17);
        let mut counts = vec![0u64; s.steps().len()];
        for t in 0..n {
            counts[s.draw(site, StepSampler::variate(key, t))] += 1;
        }
        for (z, &p) in law.support.iter().zip(&law.probs) {
            let idx = s.steps().iter().position(|w| w == z).unwrap();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((counts[idx] as f64 / n as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn path_functional_endpoints_and_grid() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap();
        let p = simulate_walk(&env, 0, 100, 1).unwrap();
        let v = path_functional(&p, 100, &[0.0, 1.0, 0.37, 0.375]).unwrap();
        assert_eq!(v[0], vec![0.0, 0.0]);
        assert_eq!(
            v[1],
            p.positions[100].iter().map(|&c| c as f64 / 10.0).collect::<Vec<_>>()
        );
        assert_eq!(
            v[2],
            p.positions[37].iter().map(|&c| c as f64 / 10.0).collect::<Vec<_>>()
        );
        let mid: Vec<f64> = (0..2)
            .map(|c| 0.5 * (p.positions[37][c] + p.positions[38][c]) as f64 / 10.0)
            .collect();
        assert!(v[3].iter().zip(&mid).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(path_functional(&p, 100, &[1.5]).is_err());
        assert!(path_functional(&p, 200, &[0.5]).is_err());
        assert!(p.to_csv(100).unwrap().starts_with("t,x0,x1\n0,"));
    }
}
