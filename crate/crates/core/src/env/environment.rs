use serde::{Deserialize, Serialize};

use super::model::{CycleModel, RangeSet, WeightLaw};
use crate::error::{Error, Result};
use crate::lattice::{sub, Point, Torus};
use crate::rng::{mix, unit_f64};

const TAG_CYCLE: u64 = 0x6379_636c_65; // "cycle"
const TAG_COUPLING: u64 = 0x636f_7570_6c65; // "couple"

/// One cycle vertex as seen from a site `x`: the translate `C_i + (x - z_{i,j})`
/// covers `x`, and leaving `x` along that translate moves by `step`.
#[derive(Debug, Clone)]
pub(crate) struct Cover {
    pub cycle: usize,
    /// `-z_{i,j}`: the translate covering `x` sits at `x + offset`.
    pub offset: Point,
    /// Index of `z_{i,j+1} - z_{i,j}` in the range set.
    pub step: usize,
}

pub(crate) fn cover_table(model: &CycleModel, range: &RangeSet) -> Vec<Cover> {
    let mut out = Vec::new();
    for (i, c) in model.cycles().iter().enumerate() {
        for (a, b) in c.edges() {
            let step = range.position(&sub(b, a)).expect("edge step lies in its range set");
            out.push(Cover {
                cycle: i,
                offset: a.iter().map(|v| -v).collect(),
                step,
            });
        }
    }
    out
}

/// A sampled, periodized environment: the weights `W_i(T_y ω)` of every
/// translate `C_i + y`, one per torus site `y` and cycle `i`.
///
/// Immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Environment {
    model: CycleModel,
    torus: Torus,
    seed: u64,
    weights: Vec<Vec<f64>>,
    #[serde(skip)]
    reversed_view: bool,
}

impl PartialEq for Environment {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model
            && self.torus == other.torus
            && self.seed == other.seed
            && self.reversed_view == other.reversed_view
            && self
                .weights
                .iter()
                .flatten()
                .zip(other.weights.iter().flatten())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Sample the environment for `model` on the torus of side `side`.
///
/// Weights are a pure function of `(seed, cycle index, site)`.
pub fn build_environment(model: &CycleModel, side: usize, seed: u64) -> Result<Environment> {
    let (worst, diam) = model.max_diameter();
    if (side as i64) <= 2 * diam {
        return Err(Error::Config(format!(
            "torus side {side} must exceed twice the ℓ∞ diameter of cycle {worst} (diameter {diam})"
        )));
    }
    if let Some((i, [lo, _])) = model.bounds().iter().enumerate().find(|(_, b)| b[0] < 0.0) {
        return Err(Error::Model(format!("cycle {i}: negative lower bound {lo}")));
    }
    let torus = Torus::new(model.dim(), side);
    let n = torus.num_sites();
    let mut weights = vec![vec![0.0; n]; model.cycles().len()];
    for (i, law) in model.laws().iter().enumerate() {
        let w = &mut weights[i];
        match *law {
            WeightLaw::Constant { value } => w.fill(value),
            WeightLaw::Uniform { low, high } => {
                for (site, slot) in w.iter_mut().enumerate() {
                    let u = unit_f64(mix(seed, &[TAG_CYCLE, i as u64, site as u64]));
                    *slot = (low + (high - low) * u).clamp(low, high);
                }
            }
            WeightLaw::Bernoulli { p } => {
                for (site, slot) in w.iter_mut().enumerate() {
                    let u = unit_f64(mix(seed, &[TAG_CYCLE, i as u64, site as u64]));
                    *slot = if u < p { 1.0 } else { 0.0 };
                }
            }
            WeightLaw::Coupled => {
                let (g, pos) = model.coupling_of(i).expect("validated coupling");
                let p = model.couplings()[g].p;
                for (site, slot) in w.iter_mut().enumerate() {
                    let u = unit_f64(mix(seed, &[TAG_COUPLING, g as u64, site as u64]));
                    let first = if u < p { 1.0 } else { 0.0 };
                    *slot = if pos == 0 { first } else { 1.0 - first };
                }
            }
        }
    }
    Ok(Environment {
        model: model.clone(),
        torus,
        seed,
        weights,
        reversed_view: false,
    })
}

impl Environment {
    pub fn model(&self) -> &CycleModel {
        &self.model
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn side(&self) -> usize {
        self.torus.side
    }

    pub fn dim(&self) -> usize {
        self.torus.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_sites(&self) -> usize {
        self.torus.num_sites()
    }

    /// `W_i(T_y ω)` for cycle `i` at site `y`.
    pub fn weight(&self, cycle: usize, site: usize) -> f64 {
        self.weights[cycle][site]
    }

    pub fn weights(&self, cycle: usize) -> &[f64] {
        &self.weights[cycle]
    }

    /// True when this view was produced by [`Environment::reversed`].
    pub fn is_reversed(&self) -> bool {
        self.reversed_view
    }

    /// The same weights attached to the reversed cycles. Its step
    /// distributions are the `p^*_z` of the time-reversed walk.
    pub fn reversed(&self) -> Environment {
        Environment {
            model: self.model.reversed(),
            torus: self.torus,
            seed: self.seed,
            weights: self.weights.clone(),
            reversed_view: !self.reversed_view,
        }
    }

    /// Replace the model's cycles by translated representatives while keeping
    /// the same weight field. The walk is unchanged up to relabeling the
    /// weights by the shift.
    pub fn with_model(&self, model: CycleModel) -> Result<Environment> {
        if model.cycles().len() != self.model.cycles().len() || model.dim() != self.dim() {
            return Err(Error::Model(
                "replacement model must keep the cycle count and dimension".into(),
            ));
        }
        Ok(Environment { model, ..self.clone() })
    }

    /// Copy of the environment with one weight overridden.
    pub fn with_weight(&self, cycle: usize, site: usize, value: f64) -> Environment {
        let mut e = self.clone();
        e.weights[cycle][site] = value;
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::model::{random_conductance, square_triangle};

    #[test]
    fn constant_law_gives_unit_weights() {
        let env = build_environment(&random_conductance(2, 1.0, 1.0).unwrap(), 8, 42).unwrap();
        assert_eq!(env.num_sites(), 64);
        for i in 0..2 {
            assert!(env.weights(i).iter().all(|&w| w == 1.0));
        }
    }

    #[test]
    fn coupled_pair_is_complementary() {
        let env = build_environment(&square_triangle(0.5).unwrap(), 16, 7).unwrap();
        for s in 0..env.num_sites() {
            let (a, b) = (env.weight(0, s), env.weight(1, s));
            assert_eq!(a + b, 1.0);
            assert!(a == 0.0 || a == 1.0);
        }
        let ones = env.weights(0).iter().filter(|&&w| w == 1.0).count();
        // 256 Bernoulli(1/2) draws: sd 8
        assert!((96..=160).contains(&ones), "{ones}");
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let m = square_triangle(0.5).unwrap();
        let a = build_environment(&m, 16, 7).unwrap();
        let b = build_environment(&m, 16, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = build_environment(&m, 16, 8).unwrap();
        assert_ne!(a.weights(0), c.weights(0));
    }

    #[test]
    fn side_must_exceed_twice_the_diameter() {
        let m = square_triangle(0.5).unwrap();
        let err = build_environment(&m, 2, 1).unwrap_err();
        assert!(matches!(err, Error::Config(ref s) if s.contains("cycle")));
        assert!(build_environment(&m, 3, 1).is_ok());
    }

    #[test]
    fn uniform_weights_within_bounds() {
        let m = random_conductance(2, 0.5, 2.0).unwrap();
        let env = build_environment(&m, 12, 3).unwrap();
        for i in 0..2 {
            assert!(env.weights(i).iter().all(|&w| (0.5..=2.0).contains(&w)));
        }
    }
}
