use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{seed_manifest, ExperimentConfig, SeedTable, COMMANDS};
use crate::analysis::{
    assemble_kernel, box_set, constructive_power, gaussian_bound_fit, isoperimetric_check, nash_estimate,
    nash_recursion_check, ondiag_decay, search_a1_power, DecaySummary,
};
use crate::corrector::{
    adjoint_identity_check, build_env_chain, covariance_matrix, h_minus_one_check, lambda_sweep, local_drift,
    poisson_solve, poisson_solve_dense, sector_condition_check, CorrectorField, Covariance, DriftField, EnvChain,
};
use crate::env::{build_environment, validate_assumptions, Environment};
use crate::error::{Error, Result};
use crate::montecarlo::{
    clt_checkpoints, empirical_gaussian_check, martingale_increment_covariance, martingale_residual, occupation_kl,
    simulate_walk,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="`, `">="`, `"<"`, `">"` or `"=="` against `threshold`.
    pub relation: String,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: &str, threshold: f64) -> Self {
        let passed = match relation {
            "<=" => value <= threshold,
            ">=" => value >= threshold,
            "<" => value < threshold,
            ">" => value > threshold,
            "==" => value == threshold,
            _ => false,
        };
        Self {
            name: name.into(),
            value,
            relation: relation.into(),
            threshold,
            passed,
        }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, "==", 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub checks: Vec<Check>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
}

impl StageRecord {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            checks: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub seeds: SeedTable,
    pub stages: Vec<StageRecord>,
    pub passed: bool,
}

/// Wall-clock seconds per stage, kept apart from the manifest so that the
/// manifest itself is reproducible byte for byte.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    env: Environment,
    seeds: SeedTable,
    out: PathBuf,
    solved: Option<(EnvChain, DriftField, CorrectorField, Covariance)>,
}

impl Ctx<'_> {
    fn write(&self, stage: &mut StageRecord, name: &str, body: &str) -> Result<()> {
        fs::write(self.out.join(name), body)?;
        stage.artifacts.push(name.into());
        Ok(())
    }

    fn write_json<T: Serialize>(&self, stage: &mut StageRecord, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(stage, name, &s)
    }

    fn solved(&mut self) -> Result<&(EnvChain, DriftField, CorrectorField, Covariance)> {
        if self.solved.is_none() {
            let chain = build_env_chain(&self.env)?;
            let drift = local_drift(&chain);
            let field = poisson_solve(&chain, &drift, self.cfg.params.tol)?;
            let cov = covariance_matrix(&chain, &field)?;
            self.solved = Some((chain, drift, field, cov));
        }
        Ok(self.solved.as_ref().unwrap())
    }
}

fn attribute(stage: &str, e: Error) -> Error {
    let tag = |m: String| format!("[{stage}] {m}");
    match e {
        Error::Config(m) => Error::Config(tag(m)),
        Error::Model(m) => Error::Model(tag(m)),
        Error::Data(m) => Error::Data(tag(m)),
        Error::Contract(m) => Error::Contract(tag(m)),
        Error::Parameter(m) => Error::Config(tag(m)),
        Error::Numerical { message, residual } => Error::Numerical {
            message: tag(message),
            residual,
        },
        other => other,
    }
}

fn stages_for(command: &str) -> Result<Vec<&'static str>> {
    match command {
        "full-report" => Ok(COMMANDS[..6].to_vec()),
        c => COMMANDS[..6]
            .iter()
            .find(|&&s| s == c)
            .map(|&s| vec![s])
            .ok_or_else(|| Error::Config(format!("unknown command {c:?}; expected one of {COMMANDS:?}"))),
    }
}

/// Execute `command` (or the config's own command), writing artifacts,
/// `manifest.json` and `timings.json` into `out`.
pub fn run(cfg: &ExperimentConfig, command: Option<&str>, out: &Path) -> Result<(RunManifest, Timings)> {
    cfg.check()?;
    let command = command
        .map(str::to_string)
        .or_else(|| cfg.command.clone())
        .ok_or_else(|| Error::Config("no command given".into()))?;
    let stages = stages_for(&command)?;
    fs::create_dir_all(out)?;
    let model = cfg.model.build()?;
    let seeds = seed_manifest(cfg);
    let env = build_environment(&model, cfg.side, seeds.get("environment"))?;
    let mut ctx = Ctx {
        cfg,
        env,
        seeds: seeds.clone(),
        out: out.to_path_buf(),
        solved: None,
    };
    let mut records = Vec::new();
    let mut timings = Timings::default();
    for name in stages {
        let t = Instant::now();
        let mut rec = StageRecord::new(name);
        let res = match name {
            "validate" => stage_validate(&mut ctx, &mut rec),
            "kernel-checks" => stage_kernel(&mut ctx, &mut rec),
            "nash" => stage_nash(&mut ctx, &mut rec),
            "decay" => stage_decay(&mut ctx, &mut rec),
            "corrector" => stage_corrector(&mut ctx, &mut rec),
            "clt" => stage_clt(&mut ctx, &mut rec),
            _ => unreachable!(),
        };
        res.map_err(|e| attribute(name, e))?;
        timings.stages.push((name.to_string(), t.elapsed().as_secs_f64()));
        records.push(rec);
    }
    let manifest = RunManifest {
        tool: "rwre".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        config_hash: cfg.hash(),
        master_seed: cfg.seed,
        seeds,
        passed: records.iter().all(StageRecord::passed),
        stages: records,
    };
    let mut s = serde_json::to_string_pretty(&manifest)?;
    s.push('\n');
    fs::write(out.join("manifest.json"), s)?;
    fs::write(out.join("timings.json"), serde_json::to_string_pretty(&timings)? + "\n")?;
    Ok((manifest, timings))
}

fn stage_validate(ctx: &mut Ctx, rec: &mut StageRecord) -> Result<()> {
    let p = &ctx.cfg.params;
    let report = validate_assumptions(&ctx.env, p.probe_n, p.probe_eps)?;
    rec.checks
        .push(Check::new("mass_lower_bound", report.mass_bounds[0], ">", 0.0));
    rec.checks.push(Check::new(
        "irreducibility_n",
        report.certified_n().map_or(f64::INFINITY, |n| n as f64),
        "<=",
        p.probe_n as f64,
    ));
    ctx.write_json(rec, "validation.json", &report)
}

fn normal_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn stage_kernel(ctx: &mut Ctx, rec: &mut StageRecord) -> Result<()> {
    let env = &ctx.env;
    let q = assemble_kernel(env)?;
    let c = |name: &str, v: f64, t: f64| Check::new(name, v, "<", t);
    rec.checks.push(c("row_sum_error", q.row_sum_error(), 1e-10));
    rec.checks.push(c("pi_invariance", q.invariance_residual(), 1e-10));
    let reversed = assemble_kernel(&env.reversed())?;
    rec.checks
        .push(c("time_reversal", q.adjoint()?.max_abs_diff(&reversed), 1e-12));
    let sym = q.symmetrized_power(1)?;
    let scale = q.pi().iter().cloned().fold(0.0, f64::max);
    rec.checks.push(c(
        "symmetrized_detailed_balance",
        sym.detailed_balance_error() / scale,
        1e-12,
    ));

    let chain = build_env_chain(env)?;
    let adj = adjoint_identity_check(&chain, ctx.cfg.params.adjoint_trials, ctx.seeds.get("test-functions"));
    rec.checks.push(c("adjoint_identity", adj.max_residual, 1e-10));
    let (r_inv, rs_inv) = chain.invariance_residuals();
    rec.checks.push(c("q_invariance_r", r_inv, 1e-12));
    rec.checks.push(c("q_invariance_r_star", rs_inv, 1e-12));

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seeds.get("test-functions"));
    let f = normal_field(&mut rng, chain.num_sites());
    let e = chain.energy(&f, &f);
    rec.checks.push(c(
        "increment_energy_identity",
        (chain.increment_energy(&f) - 2.0 * e).abs() / e.max(1.0),
        1e-12,
    ));
    rec.checks
        .push(c("cycle_energy_identity", (chain.cycle_energy(&f) - e).abs(), 1e-10));

    if env.model().name() == Some("square_triangle") {
        let torus = env.torus();
        let err = (0..env.num_sites())
            .map(|x| (q.pi()[x] - 3.0 - env.weight(0, torus.shift(x, &[0, -1]))).abs())
            .fold(0.0, f64::max);
        rec.checks.push(c("square_triangle_mass_closed_form", err, 1e-12));
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        checks: &'a [Check],
        adjoint_trials: usize,
        adjoint_seed: u64,
    }
    let summary = Summary {
        checks: &rec.checks,
        adjoint_trials: adj.trials,
        adjoint_seed: adj.seed,
    };
    let body = serde_json::to_string_pretty(&summary)? + "\n";
    ctx.write(rec, "kernel_checks.json", &body)
}

#[derive(Serialize)]
struct NashSummary {
    irreducibility_n: Option<usize>,
    a1_k: usize,
    a1_m: Option<usize>,
    a1_best_delta: Option<f64>,
    a1_delta: Option<f64>,
    constructive_m: usize,
    nash: crate::analysis::NashCertificate,
    isoperimetric_kappa: f64,
    recursion: Option<crate::analysis::RecursionCheck>,
    recursion_reference: Vec<(usize, crate::analysis::RecursionCheck)>,
}

fn stage_nash(ctx: &mut Ctx, rec: &mut StageRecord) -> Result<()> {
    let p = &ctx.cfg.params;
    let env = &ctx.env;
    let q = assemble_kernel(env)?;
    let report = validate_assumptions(env, p.probe_n, p.probe_eps)?;
    let n_irr = report.certified_n();
    let b = report.range_bound;
    let d = env.dim();
    let big_k = n_irr.unwrap_or(1) * b as usize;
    let m_c = constructive_power(d, n_irr.unwrap_or(1), b);
    if env.side() <= 2 * (3 * big_k + 1) {
        return Err(Error::Config(format!(
            "side {} too small for the local connectivity check with K = {big_k}; need side > {}",
            env.side(),
            2 * (3 * big_k + 1)
        )));
    }
    let eps0 = p.probe_eps;
    let found = match n_irr {
        Some(_) => search_a1_power(&q, big_k, m_c, |m| eps0.powi(2 * m as i32))?,
        None => None,
    };
    rec.checks.push(Check::new(
        "a1_certified_m",
        found.as_ref().map_or(f64::INFINITY, |(m, _)| *m as f64),
        "<=",
        m_c as f64,
    ));
    let m = p.nash_m.or(found.as_ref().map(|f| f.0)).unwrap_or(1);
    let cert = nash_estimate(&q, m, p.nash_trials, ctx.seeds.get("nash"))?;
    rec.checks.push(Check::new("nash_kappa", cert.kappa, ">", 0.0));

    let sym = q.symmetrized_power(m)?;
    let mut sets = Vec::new();
    let mut r = 1;
    while r <= env.side() / 4 {
        for corner in [vec![0i64; d], (0..d as i64).map(|k| 3 + 2 * k).collect()] {
            sets.push(box_set(&sym, &corner, r));
        }
        r *= 2;
    }
    let iso = isoperimetric_check(&sym, &sets)?;

    let u1 = (0..sym.num_sites())
        .flat_map(|x| {
            let (c, v) = sym.row(x);
            c.iter().zip(v).map(move |(&y, &k)| (y, k)).collect::<Vec<_>>()
        })
        .map(|(y, k)| k / sym.pi()[y])
        .fold(0.0, f64::max);
    let recursion = nash_recursion_check(u1, cert.kappa, d, 10_000).ok();
    if let Some(rc) = &recursion {
        rec.checks.push(Check::flag("nash_recursion", rc.holds));
    }
    let mut reference = Vec::new();
    for dd in [2, 3] {
        let rc = nash_recursion_check(1.0, 0.1, dd, 10_000)?;
        rec.checks
            .push(Check::flag(&format!("nash_recursion_reference_d{dd}"), rc.holds));
        reference.push((dd, rc));
    }
    let summary = NashSummary {
        irreducibility_n: n_irr,
        a1_k: big_k,
        a1_m: found.as_ref().map(|f| f.0),
        a1_best_delta: found.as_ref().map(|f| f.1.best_delta),
        a1_delta: found.as_ref().map(|f| f.1.delta),
        constructive_m: m_c,
        nash: cert,
        isoperimetric_kappa: iso.kappa,
        recursion,
        recursion_reference: reference,
    };
    ctx.write_json(rec, "nash.json", &summary)
}

fn stage_decay(ctx: &mut Ctx, rec: &mut StageRecord) -> Result<()> {
    let p = &ctx.cfg.params;
    let env = &ctx.env;
    let q = assemble_kernel(env)?;
    let series = ondiag_decay(&q, p.n_max)?;
    let d = env.dim() as f64;
    if series.window.1 > series.window.0 {
        rec.checks.push(Check::new(
            "decay_slope_deviation",
            (series.slope + d / 2.0).abs(),
            "<=",
            0.15,
        ));
    }
    let min_mass = q.pi().iter().cloned().fold(f64::INFINITY, f64::min);
    rec.checks.push(Check::new(
        "u1_times_min_mass",
        series.values[0] * min_mass,
        "<=",
        1.0 + 1e-12,
    ));
    let fit = gaussian_bound_fit(&q, p.n_max)?;
    rec.checks.push(Check::new("gaussian_c3", fit.c3, "<", f64::INFINITY));
    let profile = empirical_gaussian_check(env, p.gaussian_n)?;

    ctx.write(rec, "decay.csv", &series.to_csv())?;
    let mut csv = String::from("r2,p_max,bound\n");
    let nf = profile.n as f64;
    for &(r2, pm) in &profile.profile {
        let bound = profile.c0 * nf.powf(-d / 2.0) * (-(r2 as f64) / (profile.c0 * nf)).exp();
        csv.push_str(&format!("{r2},{pm:.12e},{bound:.12e}\n"));
    }
    ctx.write(rec, "gaussian_profile.csv", &csv)?;
    #[derive(Serialize)]
    struct Summary {
        #[serde(flatten)]
        decay: DecaySummary,
        period: usize,
        gaussian: crate::analysis::GaussianFit,
        profile_n: usize,
        profile_c0: f64,
        profile_saturated: bool,
    }
    let summary = Summary {
        decay: DecaySummary::new(&series, Some(fit.c3)),
        period: series.period,
        gaussian: fit,
        profile_n: profile.n,
        profile_c0: profile.c0,
        profile_saturated: profile.saturated,
    };
    ctx.write_json(rec, "decay.json", &summary)
}

fn stage_corrector(ctx: &mut Ctx, rec: &mut StageRecord) -> Result<()> {
    let p = ctx.cfg.params.clone();
    let tf_seed = ctx.seeds.get("test-functions");
    let side = ctx.env.side();
    let env = ctx.env.clone();
    let (chain, drift, field, cov) = ctx.solved()?.clone();
    let c = |name: &str, v: f64, t: f64| Check::new(name, v, "<", t);
    rec.checks.push(c("poisson_residual", field.residuals.poisson, 1e-10));
    rec.checks.push(c("cocycle_residual", field.residuals.cocycle, 1e-10));
    rec.checks.push(c(
        "drift_cancellation_residual",
        field.residuals.drift_cancellation,
        1e-10,
    ));
    let mres = martingale_residual(&env, &field)?;
    rec.checks.push(c("martingale_residual", mres, 1e-10));
    let dense_gap = if side <= 16 {
        let dense = poisson_solve_dense(&chain, &drift)?;
        let gap = field
            .chi
            .iter()
            .flatten()
            .zip(dense.chi.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rec.checks.push(c("dense_oracle_gap", gap, 1e-8));
        Some(gap)
    } else {
        None
    };
    let zeroed = martingale_residual(&env, &field.zeroed())?;
    rec.checks
        .push(Check::new("zeroed_corrector_residual", zeroed, "==", drift.sup_norm()));
    let inc = martingale_increment_covariance(&env, &field)?;
    let gap = (0..cov.a.len())
        .flat_map(|i| (0..cov.a.len()).map(move |j| (i, j)))
        .map(|(i, j)| (inc[i][j] - cov.a[i][j]).abs())
        .fold(0.0, f64::max);
    rec.checks.push(c("increment_covariance_gap", gap, 1e-10));
    rec.checks.push(c("covariance_asymmetry", cov.asymmetry, 1e-12));
    rec.checks
        .push(Check::new("covariance_min_eigenvalue", cov.min_eigenvalue(), ">", 0.0));
    let sector = sector_condition_check(&chain, p.bound_trials, tf_seed);
    rec.checks
        .push(Check::new("sector_ratio", sector.max_ratio, "<=", sector.bound));
    let mut hm1 = Vec::new();
    for k in 0..chain.dim() {
        let mut e = vec![0.0; chain.dim()];
        e[k] = 1.0;
        let h = h_minus_one_check(&chain, &drift, &e, p.bound_trials, tf_seed)?;
        rec.checks.push(Check::new(
            &format!("h_minus_one_ratio_e{k}"),
            h.max_ratio,
            "<=",
            h.bound,
        ));
        hm1.push(h);
    }
    let sweep = lambda_sweep(&chain, &drift, &p.lambdas, Some(&field))?;

    ctx.write(rec, "corrector.csv", &field.to_csv(&chain))?;
    let mut csv = String::from("lambda,lambda_u_norm,cauchy_increment,increment_error\n");
    for r in &sweep {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.12e}"));
        csv.push_str(&format!(
            "{},{:.12e},{},{}\n",
            r.lambda,
            r.lambda_u_norm,
            opt(r.cauchy_increment),
            opt(r.increment_error)
        ));
    }
    ctx.write(rec, "lambda_sweep.csv", &csv)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        a: &'a [Vec<f64>],
        eigenvalues: &'a [f64],
        residuals: &'a crate::corrector::CorrectorResiduals,
        martingale_residual: f64,
        dense_oracle_gap: Option<f64>,
        drift_sup: f64,
        sector: &'a crate::corrector::BoundCheck,
        h_minus_one: &'a [crate::corrector::BoundCheck],
        h_minus_one_anchoring: Vec<crate::lattice::Point>,
        lambda_sweep: &'a [crate::corrector::SweepRow],
    }
    let summary = Summary {
        a: &cov.a,
        eigenvalues: &cov.eigenvalues,
        residuals: &field.residuals,
        martingale_residual: mres,
        dense_oracle_gap: dense_gap,
        drift_sup: drift.sup_norm(),
        sector: &sector,
        h_minus_one: &hm1,
        h_minus_one_anchoring: env.model().cycles().iter().map(|c| c.points()[0].clone()).collect(),
        lambda_sweep: &sweep,
    };
    ctx.write_json(rec, "corrector.json", &summary)
}

fn stage_clt(ctx: &mut Ctx, rec: &mut StageRecord) -> Result<()> {
    let p = ctx.cfg.params.clone();
    let env = ctx.env.clone();
    let walkers_seed = ctx.seeds.get("walkers");
    let path_seed = ctx.seeds.get("path");
    let (_, _, field, cov) = ctx.solved()?.clone();
    let results = clt_checkpoints(&env, &field, &cov.a, &p.checkpoints, p.walkers, walkers_seed)?;
    let last = results.last().unwrap();
    rec.checks
        .push(Check::flag("clt_covariance_within_band", last.covariance_ok()));
    rec.checks.push(Check::flag("clt_mean_within_4se", last.mean_ok()));
    if results.len() > 1 {
        let shares: Vec<f64> = results.iter().map(|r| r.corrector_share).collect();
        let monotone = shares.iter().all(|&v| v == 0.0) || shares.windows(2).all(|w| w[1] < w[0]);
        rec.checks.push(Check::flag("corrector_share_decreasing", monotone));
    }
    let kl = occupation_kl(&env, &p.occupation_horizons, path_seed)?;
    rec.checks.push(Check::flag(
        "occupation_kl_decreasing",
        kl.windows(2).all(|w| w[1] < w[0]),
    ));
    let n = *p.checkpoints.last().unwrap();
    let path = simulate_walk(&env, 0, n, path_seed)?;
    ctx.write(rec, "clt.csv", &last.to_csv())?;
    ctx.write(rec, "path.csv", &path.to_csv(n)?)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        checkpoints: &'a [crate::montecarlo::CltResult],
        occupation_horizons: &'a [usize],
        occupation_kl: &'a [f64],
        walkers_seed: u64,
    }
    let summary = Summary {
        checkpoints: &results,
        occupation_horizons: &p.occupation_horizons,
        occupation_kl: &kl,
        walkers_seed,
    };
    ctx.write_json(rec, "clt.json", &summary)
}

/// Human-readable summary of a finished run. The flag is false when no stage
/// ran, an artifact is missing, or a check failed.
pub fn emit_report(manifest: &RunManifest, out: &Path) -> (String, bool) {
    let mut s = format!(
        "rwre {} · command {} · seed {} · config {}\n",
        manifest.version,
        manifest.command,
        manifest.master_seed,
        &manifest.config_hash[..12.min(manifest.config_hash.len())]
    );
    if manifest.stages.is_empty() {
        s.push_str("no stages executed\n");
        return (s, false);
    }
    let mut ok = manifest.passed;
    for st in &manifest.stages {
        let missing: Vec<&String> = st.artifacts.iter().filter(|a| !out.join(a).is_file()).collect();
        let status = if !missing.is_empty() {
            ok = false;
            "ABSENT"
        } else if st.passed() {
            "pass"
        } else {
            "FAIL"
        };
        s.push_str(&format!("\n[{status}] {}\n", st.name));
        if st.name == "validate" {
            s.push_str("  sampled certification: this environment only, not uniform over environments\n");
        }
        for c in &st.checks {
            s.push_str(&format!(
                "  {} {:<36} {:>14.6e} {} {:.6e}\n",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.relation,
                c.threshold
            ));
        }
        for a in &st.artifacts {
            let mark = if missing.contains(&a) { " (missing)" } else { "" };
            s.push_str(&format!("  -> {}{mark}\n", out.join(a).display()));
        }
    }
    s.push_str(&format!("\noverall: {}\n", if ok { "PASS" } else { "FAIL" }));
    (s, ok)
}
