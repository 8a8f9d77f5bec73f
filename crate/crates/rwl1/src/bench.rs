//! Recovery-rate sweeps and noisy improvement benchmarks.
//!
//! Trial `t` of every run uses the instance seeded with `base_seed + t`, for
//! every algorithm and every sparsity level, so comparisons are paired.
//! Trials are spread over a bounded worker pool and collected in trial order,
//! which makes results independent of the worker count.

use std::collections::BTreeMap;
use std::path::Path;

use log::{debug, warn};
use rayon::prelude::*;
use rwl1_core::model::{self, ImprovementRecord};
use rwl1_core::probgen::{self, EnsembleSpec};
use rwl1_core::reweight::{self, Algorithm};
use rwl1_core::{ProblemInstance, SolverConfig, SolverContext, SweepResult, Weights};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Configuration of a sweep or noisy benchmark; the TOML config file mirrors
/// these fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Algorithm names. Recovery sweeps always add plain `l1` as reference.
    pub algorithms: Vec<String>,
    pub s_values: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    /// Outer budgets reported by recovery sweeps; noisy benchmarks use the
    /// largest one.
    pub rw_iters: Vec<usize>,
    pub n: usize,
    pub m: usize,
    /// Worker count; 0 uses every available core.
    pub parallelism: usize,
    /// Noise level of noisy benchmarks.
    pub sigma: f64,
    pub solver: SolverConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            algorithms: vec!["rw-sub".into(), "rw-cwb".into()],
            s_values: (15..=55).step_by(5).collect(),
            trials: 50,
            base_seed: 0,
            rw_iters: vec![1, 2],
            n: 256,
            m: 100,
            parallelism: 0,
            sigma: probgen::DEFAULT_SIGMA,
            solver: SolverConfig::default(),
        }
    }
}

impl SweepConfig {
    /// Defaults of the noisy benchmark: `n = 256`, `m = 128`, `s = 38`,
    /// 30 trials, budget 2, RW-LASSO against noisy CWB.
    pub fn noisy_default() -> Self {
        Self {
            algorithms: vec![Algorithm::RwLasso.name().into(), Algorithm::CwbNoisy.name().into()],
            s_values: vec![38],
            trials: 30,
            rw_iters: vec![2],
            m: 128,
            ..Self::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        toml::from_str(&text).map_err(|source| Error::Toml { path: path.into(), source })
    }

    fn parsed_algorithms(&self) -> Result<Vec<Algorithm>> {
        let mut out: Vec<Algorithm> = Vec::new();
        for name in &self.algorithms {
            let a: Algorithm = name.parse().map_err(|_| Error::Config(format!("unknown algorithm {name:?}")))?;
            if !out.contains(&a) {
                out.push(a);
            }
        }
        Ok(out)
    }

    fn check_common(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.s_values.is_empty() {
            return Err(Error::Config("s_values is empty".into()));
        }
        if let Some(&s) = self.s_values.iter().find(|&&s| s == 0 || s >= self.m) {
            return Err(Error::Config(format!("sparsity {s} outside (0, m={})", self.m)));
        }
        if self.m >= self.n {
            return Err(Error::Config(format!("need m < n, got m={}, n={}", self.m, self.n)));
        }
        if self.rw_iters.is_empty() {
            return Err(Error::Config("rw_iters is empty".into()));
        }
        if u64::try_from(self.trials).map_or(true, |t| self.base_seed.checked_add(t).is_none()) {
            return Err(Error::Config("base_seed + trials overflows".into()));
        }
        self.solver.validate()?;
        Ok(())
    }

    /// Checks the configuration of a recovery sweep.
    pub fn validate(&self) -> Result<()> {
        self.check_common()?;
        if let Some(a) = self.parsed_algorithms()?.into_iter().find(|a| a.needs_eta()) {
            return Err(Error::Config(format!("{a} needs a noisy instance; use the noisy benchmark")));
        }
        Ok(())
    }

    /// Checks the configuration of a noisy benchmark.
    pub fn validate_noisy(&self) -> Result<()> {
        self.check_common()?;
        if self.s_values.len() != 1 {
            return Err(Error::Config(format!(
                "noisy benchmark takes a single sparsity level, got {:?}",
                self.s_values
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let Some(a) = self.parsed_algorithms()?.into_iter().find(|a| !a.needs_eta()) {
            return Err(Error::Config(format!("{a} is not a noisy algorithm")));
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.trials as u64).map(|t| self.base_seed + t).collect()
    }

    fn max_rw_iter(&self) -> usize {
        self.rw_iters.iter().copied().max().unwrap_or(0)
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.parallelism).build()?)
    }
}

/// Column labels of a recovery sweep in output order: `l1`, then `name@k`
/// for each algorithm and budget.
fn sweep_labels(algorithms: &[Algorithm], rw_iters: &[usize]) -> Vec<(Algorithm, usize, String)> {
    let mut labels = vec![(Algorithm::L1, 0, reweight::label(Algorithm::L1, 0))];
    for &a in algorithms.iter().filter(|a| a.reweights()) {
        for &k in rw_iters {
            labels.push((a, k, reweight::label(a, k)));
        }
    }
    labels
}

fn recovery_trial(
    cfg: &SweepConfig,
    algorithms: &[Algorithm],
    labels: &[(Algorithm, usize, String)],
    s: usize,
    seed: u64,
) -> Vec<bool> {
    let mut hits = vec![false; labels.len()];
    let inst = match probgen::gen_noiseless(&EnsembleSpec::noiseless(cfg.n, cfg.m, s, seed)) {
        Ok(inst) => inst,
        Err(e) => {
            warn!("s={s} seed={seed}: instance generation failed: {e}");
            return hits;
        }
    };
    debug!("s={s} seed={seed}: instance {:016x}", inst.fingerprint());
    let x_star = inst.x_star().unwrap_or_default();
    let ctx = SolverContext::new(&inst);
    let solver = SolverConfig { rw_iter: cfg.max_rw_iter(), ..cfg.solver.clone() };
    let tol = solver.recovery_tol;
    let is_hit = |x: &[f64]| model::recovered(x, x_star, tol).unwrap_or(false);

    let start = match reweight::initial_solve(Algorithm::L1, &ctx, &solver) {
        Ok(rep) => rep,
        Err(e) => {
            warn!("s={s} seed={seed}: l1: {e}");
            return hits;
        }
    };
    hits[0] = is_hit(&start.x);
    for &a in algorithms.iter().filter(|a| a.reweights()) {
        match reweight::run_from(a, &ctx, &solver, start.clone()) {
            Ok(out) => {
                for (slot, (la, k, _)) in hits.iter_mut().zip(labels) {
                    if *la == a {
                        *slot = is_hit(out.x_after(*k));
                    }
                }
            }
            Err(e) => warn!("s={s} seed={seed}: {a}: {e}"),
        }
    }
    hits
}

/// Recovery rate per algorithm, budget and sparsity level. Solver failures
/// count as misses and are logged.
pub fn run_recovery_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let algorithms = cfg.parsed_algorithms()?;
    let labels = sweep_labels(&algorithms, &cfg.rw_iters);
    let seeds = cfg.seeds();
    let work: Vec<(usize, u64)> = cfg.s_values.iter().flat_map(|&s| seeds.iter().map(move |&seed| (s, seed))).collect();

    let outcomes: Vec<Vec<bool>> = cfg
        .pool()?
        .install(|| work.par_iter().map(|&(s, seed)| recovery_trial(cfg, &algorithms, &labels, s, seed)).collect());

    let mut recovered: BTreeMap<String, Vec<usize>> =
        labels.iter().map(|(_, _, l)| (l.clone(), vec![0; cfg.s_values.len()])).collect();
    for (i, hits) in outcomes.iter().enumerate() {
        let s_idx = i / cfg.trials;
        for ((_, _, label), &hit) in labels.iter().zip(hits) {
            if hit {
                if let Some(c) = recovered.get_mut(label) {
                    c[s_idx] += 1;
                }
            }
        }
    }
    Ok(SweepResult { sparsity_levels: cfg.s_values.clone(), recovered, trials: cfg.trials, seeds, improvements: None })
}

struct NoisyTrial {
    /// Per algorithm: recovered at `recovery_tol`, and improvement over the
    /// baseline when the baseline is not exact.
    results: Vec<Option<(bool, Option<f64>)>>,
}

fn noisy_trial(cfg: &SweepConfig, algorithms: &[Algorithm], seed: u64) -> NoisyTrial {
    let mut results = vec![None; algorithms.len()];
    let s = cfg.s_values[0];
    let inst = match probgen::gen_noisy(&EnsembleSpec::noisy(cfg.n, cfg.m, s, cfg.sigma, seed)) {
        Ok(inst) => inst,
        Err(e) => {
            warn!("seed={seed}: instance generation failed: {e}");
            return NoisyTrial { results };
        }
    };
    let solver = SolverConfig { rw_iter: cfg.max_rw_iter(), ..cfg.solver.clone() };
    let ctx = SolverContext::new(&inst);
    let baseline = match baseline(&ctx, &inst, &solver) {
        Ok(rep) => rep,
        Err(e) => {
            warn!("seed={seed}: baseline: {e}");
            return NoisyTrial { results };
        }
    };
    let x_star = inst.x_star().unwrap_or_default();
    let reuse_baseline = solver.w0.is_none();
    for (slot, &a) in results.iter_mut().zip(algorithms) {
        let out = if a == Algorithm::CwbNoisy && reuse_baseline {
            reweight::run_from(a, &ctx, &solver, baseline.clone())
        } else {
            reweight::run(a, &ctx, &solver)
        };
        let out = match out {
            Ok(out) => out,
            Err(e) => {
                warn!("seed={seed}: {a}: {e}");
                continue;
            }
        };
        let hit = model::recovered(&out.x, x_star, solver.recovery_tol).unwrap_or(false);
        let gain = match model::improvement(&out.x, &baseline.x, x_star) {
            Ok(v) => Some(v),
            Err(rwl1_core::Error::DegenerateBaseline) => None,
            Err(e) => {
                warn!("seed={seed}: {a}: {e}");
                continue;
            }
        };
        *slot = Some((hit, gain));
    }
    NoisyTrial { results }
}

/// The residual-budget ℓ1 solution with unit weights.
fn baseline(
    ctx: &SolverContext<'_>,
    inst: &ProblemInstance,
    cfg: &SolverConfig,
) -> rwl1_core::Result<rwl1_core::InnerSolveReport> {
    let eta = inst.eta().ok_or(rwl1_core::Error::MissingEta)?;
    ctx.constrained_weighted_l1(&Weights::ones(inst.n()), eta, None, cfg)
}

/// Improvement of each noisy algorithm over the unit-weight residual-budget
/// ℓ1 solution, one record per trial and algorithm, labelled by the bare
/// algorithm name. Trials whose baseline is already exact are skipped and
/// logged. `recovered` also counts exact recoveries at `recovery_tol`.
pub fn run_noisy_improvement(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate_noisy()?;
    let algorithms = cfg.parsed_algorithms()?;
    let seeds = cfg.seeds();
    let trials: Vec<NoisyTrial> =
        cfg.pool()?.install(|| seeds.par_iter().map(|&seed| noisy_trial(cfg, &algorithms, seed)).collect());

    let mut recovered: BTreeMap<String, Vec<usize>> =
        algorithms.iter().map(|a| (a.name().to_owned(), vec![0])).collect();
    let mut improvements = Vec::new();
    for (trial, &seed) in trials.iter().zip(&seeds) {
        if trial.results.iter().flatten().any(|(_, gain)| gain.is_none()) {
            warn!("seed={seed}: baseline already exact, trial skipped");
            continue;
        }
        for (&a, res) in algorithms.iter().zip(&trial.results) {
            if let Some((hit, Some(gain))) = res {
                if *hit {
                    if let Some(c) = recovered.get_mut(a.name()) {
                        c[0] += 1;
                    }
                }
                improvements.push(ImprovementRecord { algorithm: a.name().to_owned(), seed, improvement_pct: *gain });
            }
        }
    }
    Ok(SweepResult {
        sparsity_levels: cfg.s_values.clone(),
        recovered,
        trials: cfg.trials,
        seeds,
        improvements: Some(improvements),
    })
}

/// Writes a sweep as `algorithm,s,trials,recovered,rate` rows, or an
/// improvement run as `algo,seed,improvement_pct` rows.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    match &result.improvements {
        Some(records) => io::write_improvement_csv(path, records),
        None => io::write_sweep_csv(path, result),
    }
}
