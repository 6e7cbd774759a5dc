use serde::{Deserialize, Serialize};

use super::cycle::Cycle;
use crate::error::{Error, Result};
use crate::lattice::{linf, neg, Point};

/// Marginal law of one cycle weight `W_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightLaw {
    Constant {
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Bernoulli {
        p: f64,
    },
    /// Member of a complementary pair listed in [`CycleModel::couplings`].
    Coupled,
}

impl WeightLaw {
    /// Smallest interval containing the support.
    fn support(&self) -> (f64, f64) {
        match *self {
            WeightLaw::Constant { value } => (value, value),
            WeightLaw::Uniform { low, high } => (low, high),
            WeightLaw::Bernoulli { .. } | WeightLaw::Coupled => (0.0, 1.0),
        }
    }
}

/// Two cycles whose weights satisfy `W_a + W_b = 1` with `W_a ~ Bernoulli(p)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub cycles: [usize; 2],
    pub p: f64,
}

/// The displacement set `Λ` together with its ℓ∞ radius `B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeSet {
    pub steps: Vec<Point>,
    pub bound: i64,
}

impl RangeSet {
    pub fn position(&self, z: &[i64]) -> Option<usize> {
        self.steps.iter().position(|s| s.as_slice() == z)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    #[serde(default)]
    name: Option<String>,
    dimension: usize,
    cycles: Vec<Cycle>,
    weight_laws: Vec<WeightLaw>,
    #[serde(default)]
    bounds: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    couplings: Vec<Coupling>,
}

/// Cycles `C_1, …, C_K` with the laws of their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct CycleModel {
    name: Option<String>,
    dim: usize,
    cycles: Vec<Cycle>,
    laws: Vec<WeightLaw>,
    bounds: Vec<[f64; 2]>,
    couplings: Vec<Coupling>,
}

impl CycleModel {
    /// Build and validate a model. When `bounds` is `None` each cycle gets the
    /// tightest interval containing its law's support.
    pub fn new(
        dim: usize,
        cycles: Vec<Cycle>,
        laws: Vec<WeightLaw>,
        bounds: Option<Vec<[f64; 2]>>,
        couplings: Vec<Coupling>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Model("dimension must be positive".into()));
        }
        if cycles.is_empty() {
            return Err(Error::Model("a model needs at least one cycle".into()));
        }
        if laws.len() != cycles.len() {
            return Err(Error::Model(format!(
                "{} cycles but {} weight laws",
                cycles.len(),
                laws.len()
            )));
        }
        for (i, c) in cycles.iter().enumerate() {
            if c.dim() != dim {
                return Err(Error::Model(format!(
                    "cycle {i} lives in dimension {}, model dimension is {dim}",
                    c.dim()
                )));
            }
        }
        for (i, law) in laws.iter().enumerate() {
            match *law {
                WeightLaw::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                    return Err(Error::Model(format!(
                        "cycle {i}: constant weight {value} must be finite and ≥ 0"
                    )));
                }
                WeightLaw::Uniform { low, high } if !(0.0 <= low && low <= high && high.is_finite()) => {
                    return Err(Error::Model(format!(
                        "cycle {i}: uniform law needs 0 ≤ low ≤ high < ∞, got [{low}, {high}]"
                    )));
                }
                WeightLaw::Bernoulli { p } if !(0.0..=1.0).contains(&p) => {
                    return Err(Error::Model(format!("cycle {i}: Bernoulli p = {p} outside [0, 1]")));
                }
                _ => {}
            }
        }
        let mut membership = vec![None; cycles.len()];
        for (g, cp) in couplings.iter().enumerate() {
            if !(0.0..=1.0).contains(&cp.p) {
                return Err(Error::Model(format!("coupling {g}: p = {} outside [0, 1]", cp.p)));
            }
            let [a, b] = cp.cycles;
            if a == b || a >= cycles.len() || b >= cycles.len() {
                return Err(Error::Model(format!(
                    "coupling {g} must name two distinct cycles, got {:?}",
                    cp.cycles
                )));
            }
            for c in [a, b] {
                if membership[c].replace(g).is_some() {
                    return Err(Error::Model(format!("cycle {c} appears in two couplings")));
                }
                if laws[c] != WeightLaw::Coupled {
                    return Err(Error::Model(format!(
                        "cycle {c} is in coupling {g} but its law is not `coupled`"
                    )));
                }
            }
        }
        for (i, law) in laws.iter().enumerate() {
            if *law == WeightLaw::Coupled && membership[i].is_none() {
                return Err(Error::Model(format!(
                    "cycle {i} has law `coupled` but no coupling group"
                )));
            }
        }
        let bounds = match bounds {
            Some(b) => {
                if b.len() != cycles.len() {
                    return Err(Error::Model(format!(
                        "{} cycles but {} bound intervals",
                        cycles.len(),
                        b.len()
                    )));
                }
                b
            }
            None => laws
                .iter()
                .map(|l| {
                    let (lo, hi) = l.support();
                    [lo, hi]
                })
                .collect(),
        };
        for (i, (law, [lo, hi])) in laws.iter().zip(&bounds).enumerate() {
            if *lo < 0.0 {
                return Err(Error::Model(format!("cycle {i}: negative lower bound {lo}")));
            }
            if lo > hi {
                return Err(Error::Model(format!("cycle {i}: empty bound interval [{lo}, {hi}]")));
            }
            let (s_lo, s_hi) = law.support();
            // Coupled and Bernoulli laws only need their atoms covered.
            let ok = match law {
                WeightLaw::Bernoulli { p } => (*p == 0.0 || *lo <= 1.0 && 1.0 <= *hi) && (*p == 1.0 || *lo <= 0.0),
                _ => *lo <= s_lo && s_hi <= *hi,
            };
            if !ok {
                return Err(Error::Model(format!(
                    "cycle {i}: bounds [{lo}, {hi}] do not contain the law's support [{s_lo}, {s_hi}]"
                )));
            }
        }
        for cp in &couplings {
            for c in cp.cycles {
                let [lo, hi] = bounds[c];
                if lo > 0.0 || hi < 1.0 {
                    return Err(Error::Model(format!(
                        "cycle {c}: coupled weights take values 0 and 1, bounds [{lo}, {hi}] exclude one of them"
                    )));
                }
            }
        }
        Ok(Self {
            name: None,
            dim,
            cycles,
            laws,
            bounds,
            couplings,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn laws(&self) -> &[WeightLaw] {
        &self.laws
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    /// Coupling group containing cycle `i`, with the position inside the pair.
    pub fn coupling_of(&self, i: usize) -> Option<(usize, usize)> {
        self.couplings
            .iter()
            .enumerate()
            .find_map(|(g, cp)| cp.cycles.iter().position(|&c| c == i).map(|pos| (g, pos)))
    }

    pub fn max_cycle_len(&self) -> usize {
        self.cycles.iter().map(Cycle::len).max().unwrap_or(0)
    }

    /// Largest ℓ∞ diameter among the cycles, with the index attaining it.
    pub fn max_diameter(&self) -> (usize, i64) {
        self.cycles
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.diameter()))
            .fold((0, -1), |best, cur| if cur.1 > best.1 { cur } else { best })
    }

    /// `Λ`: every displacement carried by some cycle edge, sorted.
    pub fn range_set(&self) -> RangeSet {
        let mut steps: Vec<Point> = self.cycles.iter().flat_map(Cycle::steps).collect();
        steps.sort();
        steps.dedup();
        let bound = steps.iter().map(|z| linf(z)).max().unwrap_or(0);
        RangeSet { steps, bound }
    }

    /// The model built on the reversed cycles `C_i^*`, with the same laws.
    pub fn reversed(&self) -> Self {
        Self {
            name: self.name.clone(),
            cycles: self.cycles.iter().map(Cycle::reversed).collect(),
            ..self.clone()
        }
    }

    /// Translate every cycle representative by `x`.
    pub fn translated(&self, x: &[i64]) -> Self {
        Self {
            cycles: self.cycles.iter().map(|c| c.translate(x)).collect(),
            ..self.clone()
        }
    }

    /// `4 · max_i n_i²`, the constant of the sector bound.
    pub fn sector_constant(&self) -> f64 {
        let n = self.max_cycle_len() as f64;
        4.0 * n * n
    }

    /// `2 · max_i Σ_{j=1}^{n_i} ‖z_{i,j}‖²` for the representatives as given.
    pub fn h_minus_one_constant(&self) -> f64 {
        let m = self
            .cycles
            .iter()
            .map(|c| c.points()[1..].iter().map(|p| crate::lattice::norm2_sq(p)).sum::<i64>())
            .max()
            .unwrap_or(0);
        2.0 * m as f64
    }

    /// Check that the reversed range is `-Λ`.
    pub fn reversed_range_is_negated(&self) -> bool {
        let mut neg_steps: Vec<Point> = self.range_set().steps.iter().map(|z| neg(z)).collect();
        neg_steps.sort();
        neg_steps == self.reversed().range_set().steps
    }
}

impl TryFrom<RawModel> for CycleModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        let m = CycleModel::new(raw.dimension, raw.cycles, raw.weight_laws, raw.bounds, raw.couplings)?;
        Ok(match raw.name {
            Some(n) => m.with_name(n),
            None => m,
        })
    }
}

impl From<CycleModel> for RawModel {
    fn from(m: CycleModel) -> Self {
        RawModel {
            name: m.name,
            dimension: m.dim,
            cycles: m.cycles,
            weight_laws: m.laws,
            bounds: Some(m.bounds),
            couplings: m.couplings,
        }
    }
}

fn cyc(points: &[&[i64]]) -> Cycle {
    Cycle::new(points.iter().map(|p| p.to_vec()).collect()).expect("built-in cycle")
}

fn square() -> Cycle {
    cyc(&[&[0, 0], &[1, 0], &[1, 1], &[0, 1], &[0, 0]])
}

fn lower_triangle() -> Cycle {
    cyc(&[&[0, 0], &[1, 0], &[1, 1], &[0, 0]])
}

fn upper_triangle() -> Cycle {
    cyc(&[&[0, 0], &[1, 1], &[0, 1], &[0, 0]])
}

/// Random conductances: `K = d`, `C_i = (0, e_i, 0)`, `W_i ~ U[low, high]`
/// (constant when `low == high`).
pub fn random_conductance(dim: usize, low: f64, high: f64) -> Result<CycleModel> {
    let cycles = (0..dim)
        .map(|k| {
            let mut e = vec![0; dim];
            e[k] = 1;
            Cycle::new(vec![vec![0; dim], e, vec![0; dim]])
        })
        .collect::<Result<Vec<_>>>()?;
    let law = if low == high {
        WeightLaw::Constant { value: low }
    } else {
        WeightLaw::Uniform { low, high }
    };
    Ok(CycleModel::new(dim, cycles, vec![law; dim], None, vec![])?.with_name("random_conductance"))
}

/// Square and lower triangle with independent `U[low, high]` weights.
pub fn uniformly_elliptic(low: f64, high: f64) -> Result<CycleModel> {
    let law = WeightLaw::Uniform { low, high };
    Ok(CycleModel::new(
        2,
        vec![square(), lower_triangle()],
        vec![law.clone(), law],
        None,
        vec![],
    )?
    .with_name("uniformly_elliptic"))
}

/// Square `C_1` and triangle `C_2` with `W_1 ~ Bernoulli(p)`, `W_2 = 1 - W_1`.
pub fn square_triangle(p: f64) -> Result<CycleModel> {
    Ok(CycleModel::new(
        2,
        vec![square(), lower_triangle()],
        vec![WeightLaw::Coupled, WeightLaw::Coupled],
        None,
        vec![Coupling { cycles: [0, 1], p }],
    )?
    .with_name("square_triangle"))
}

/// Upper triangle `C_1` and lower triangle `C_2`, coupled as in
/// [`square_triangle`]. Contains corridors, so strong irreducibility fails.
pub fn triangle_triangle(p: f64) -> Result<CycleModel> {
    Ok(CycleModel::new(
        2,
        vec![upper_triangle(), lower_triangle()],
        vec![WeightLaw::Coupled, WeightLaw::Coupled],
        None,
        vec![Coupling { cycles: [0, 1], p }],
    )?
    .with_name("triangle_triangle"))
}

/// The names accepted by [`builtin`].
pub const BUILTIN_MODELS: [&str; 4] = [
    "random_conductance",
    "uniformly_elliptic",
    "square_triangle",
    "triangle_triangle",
];

/// Built-in model with its default parameters.
pub fn builtin(name: &str) -> Result<CycleModel> {
    match name {
        "random_conductance" => random_conductance(2, 1.0, 1.0),
        "uniformly_elliptic" => uniformly_elliptic(0.5, 1.5),
        "square_triangle" => square_triangle(0.5),
        "triangle_triangle" => triangle_triangle(0.5),
        other => Err(Error::Config(format!(
            "unknown built-in model {other:?}; expected one of {BUILTIN_MODELS:?}"
        ))),
    }
}
