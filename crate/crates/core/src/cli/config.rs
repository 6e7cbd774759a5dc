use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{builtin, random_conductance, square_triangle, triangle_triangle, uniformly_elliptic, CycleModel};
use crate::error::{Error, Result};
use crate::montecarlo::walker_seed;
use crate::rng::derive_seed;

pub const COMMANDS: [&str; 7] = [
    "validate",
    "kernel-checks",
    "nash",
    "decay",
    "corrector",
    "clt",
    "full-report",
];

/// Built-in model by name, with optional overrides of its parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinSpec {
    pub builtin: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Builtin(BuiltinSpec),
    Custom(CycleModel),
}

impl ModelSpec {
    pub fn build(&self) -> Result<CycleModel> {
        let b = match self {
            Self::Custom(m) => return Ok(m.clone()),
            Self::Builtin(b) => b,
        };
        let fixed = |what: &str, set: bool| {
            if set {
                Err(Error::Config(format!(
                    "model {:?} takes no parameter {what:?}",
                    b.builtin
                )))
            } else {
                Ok(())
            }
        };
        match b.builtin.as_str() {
            "random_conductance" => {
                fixed("p", b.p.is_some())?;
                let low = b.low.unwrap_or(1.0);
                random_conductance(b.dimension.unwrap_or(2), low, b.high.unwrap_or(low))
            }
            "uniformly_elliptic" => {
                fixed("p", b.p.is_some())?;
                fixed("dimension", b.dimension.is_some_and(|d| d != 2))?;
                uniformly_elliptic(b.low.unwrap_or(0.5), b.high.unwrap_or(1.5))
            }
            "square_triangle" | "triangle_triangle" => {
                fixed("low", b.low.is_some())?;
                fixed("high", b.high.is_some())?;
                fixed("dimension", b.dimension.is_some_and(|d| d != 2))?;
                let p = b.p.unwrap_or(0.5);
                if b.builtin == "square_triangle" {
                    square_triangle(p)
                } else {
                    triangle_triangle(p)
                }
            }
            other => builtin(other),
        }
    }
}

/// Parameters of the individual commands; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Longest path searched when certifying irreducibility.
    pub probe_n: usize,
    /// Minimal step probability along certifying paths.
    pub probe_eps: f64,
    /// Random pairs for the adjoint identity.
    pub adjoint_trials: usize,
    /// Random functions for the sector and `H₋₁` bounds.
    pub bound_trials: usize,
    pub tol: f64,
    pub lambdas: Vec<f64>,
    /// Horizon of the heat-kernel decay series.
    pub n_max: usize,
    /// Step count for the Gaussian profile from the origin.
    pub gaussian_n: usize,
    /// Kernel power for the Nash scan; when absent the smallest `m` passing the local connectivity check.
    pub nash_m: Option<usize>,
    pub nash_trials: usize,
    pub walkers: usize,
    /// CLT checkpoints; the last one is the horizon `N`.
    pub checkpoints: Vec<usize>,
    pub occupation_horizons: Vec<usize>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            probe_n: 4,
            probe_eps: 0.02,
            adjoint_trials: 100,
            bound_trials: 1000,
            tol: 1e-12,
            lambdas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            n_max: 256,
            gaussian_n: 64,
            nash_m: None,
            nash_trials: 500,
            walkers: 100_000,
            checkpoints: vec![256, 1024, 4096],
            occupation_horizons: vec![1_000, 10_000, 100_000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    /// Torus side length `L`.
    pub side: usize,
    /// Master seed; the environment is sampled with this seed directly.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot parse config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Range checks for every parameter the chosen command reads.
    pub fn check(&self) -> Result<()> {
        if let Some(c) = &self.command {
            if !COMMANDS.contains(&c.as_str()) {
                return Err(Error::Config(format!(
                    "unknown command {c:?}; expected one of {COMMANDS:?}"
                )));
            }
        }
        self.model.build()?;
        let p = &self.params;
        let bad = |what: &str| Err(Error::Config(format!("parameter {what} is out of range")));
        if self.side < 3 {
            return bad("side");
        }
        if p.probe_n == 0 {
            return bad("probe_n");
        }
        if !(p.probe_eps > 0.0 && p.probe_eps <= 1.0) {
            return bad("probe_eps");
        }
        if p.adjoint_trials == 0 || p.bound_trials == 0 || p.nash_trials == 0 {
            return bad("trials");
        }
        if !(p.tol > 0.0) {
            return bad("tol");
        }
        if p.lambdas.is_empty() || p.lambdas.iter().any(|&l| !(l > 0.0)) || p.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return bad("lambdas");
        }
        if p.n_max == 0 || p.gaussian_n == 0 {
            return bad("n_max");
        }
        if p.nash_m == Some(0) {
            return bad("nash_m");
        }
        if p.walkers < 100 {
            return bad("walkers");
        }
        if p.checkpoints.is_empty() || p.checkpoints[0] == 0 || p.checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return bad("checkpoints");
        }
        if p.occupation_horizons.is_empty() || p.occupation_horizons.contains(&0) {
            return bad("occupation_horizons");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub label: String,
    pub derivation: String,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTable {
    pub master: u64,
    pub entries: Vec<SeedEntry>,
    /// Walker streams are `mix(walkers, [i])` for `i < walker_count`; only the
    /// first few are listed, but all are scanned for collisions.
    pub walker_count: usize,
    pub collisions: usize,
}

impl SeedTable {
    pub fn get(&self, label: &str) -> u64 {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.value)
            .expect("seed label exists")
    }
}

const LISTED_WALKERS: usize = 8;

/// Every seed a run uses, with its derivation from the master seed.
pub fn seed_manifest(config: &ExperimentConfig) -> SeedTable {
    let master = config.seed;
    let mut entries = vec![SeedEntry {
        label: "environment".into(),
        derivation: "master".into(),
        value: master,
    }];
    for label in ["test-functions", "nash", "walkers", "path"] {
        entries.push(SeedEntry {
            label: label.into(),
            derivation: format!("derive(master, {label:?})"),
            value: derive_seed(master, label),
        });
    }
    let walkers = derive_seed(master, "walkers");
    let count = config.params.walkers;
    for i in 0..count.min(LISTED_WALKERS) {
        entries.push(SeedEntry {
            label: format!("walker-{i}"),
            derivation: format!("mix(walkers, [{i}])"),
            value: walker_seed(walkers, i as u64),
        });
    }
    let mut seen = HashSet::with_capacity(count + entries.len());
    let mut collisions = 0;
    let all = entries
        .iter()
        .map(|e| e.value)
        .chain((LISTED_WALKERS..count).map(|i| walker_seed(walkers, i as u64)));
    for v in all {
        if !seen.insert(v) {
            collisions += 1;
        }
    }
    SeedTable {
        master,
        entries,
        walker_count: count,
        collisions,
    }
}
