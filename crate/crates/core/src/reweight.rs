//! Outer re-weighting algorithms.
//!
//! | [`Algorithm`]  | weight update                               | inner problem          |
//! |----------------|---------------------------------------------|------------------------|
//! | `Oracle`       | projected subgradient, oracle dual          | weighted basis pursuit |
//! | `RwSub`        | projected subgradient, amplified constraints| weighted basis pursuit |
//! | `RwCwb`        | `wᵢ = 1/(|xᵢ| + ε)`                         | weighted basis pursuit |
//! | `RwLasso`      | projected subgradient on `(w, λ)`           | weighted LASSO (FISTA) |
//! | `CwbNoisy`     | `wᵢ = 1/(|xᵢ| + ε)`                         | residual-budget ℓ1     |
//! | `L1`           | none (`rw_iter` ignored)                    | basis pursuit, or the budgeted form when η > 0 |
//!
//! Every algorithm returns its last iterate. Besides the `rw_iter` budget a
//! run stops early when the subgradient vanishes, when the iterate is zero, or
//! when the step size is exactly zero (the next iterate would repeat the
//! current one).

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::duality::{self, PolyakStep};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, DualState, ProblemInstance, SolverConfig, Weights};
use crate::solvers::{InnerSolveReport, SolverContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    L1,
    RwSub,
    RwCwb,
    RwLasso,
    CwbNoisy,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::L1, Algorithm::RwSub, Algorithm::RwCwb, Algorithm::RwLasso, Algorithm::CwbNoisy, Algorithm::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::L1 => "l1",
            Algorithm::RwSub => "rw-sub",
            Algorithm::RwCwb => "rw-cwb",
            Algorithm::RwLasso => "rw-lasso",
            Algorithm::CwbNoisy => "cwb-noisy",
            Algorithm::Oracle => "oracle",
        }
    }

    /// Whether the algorithm needs a noise budget η.
    pub fn needs_eta(self) -> bool {
        matches!(self, Algorithm::RwLasso | Algorithm::CwbNoisy)
    }

    /// Whether `rw_iter` matters.
    pub fn reweights(self) -> bool {
        self != Algorithm::L1
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(alloc::format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitReason {
    Budget,
    ZeroSubgradient,
    ZeroIterate,
    ZeroStep,
}

impl ExitReason {
    pub fn name(self) -> &'static str {
        match self {
            ExitReason::Budget => "budget",
            ExitReason::ZeroSubgradient => "zero-subgradient",
            ExitReason::ZeroIterate => "zero-iterate",
            ExitReason::ZeroStep => "zero-step",
        }
    }
}

/// One outer iteration. `alpha` is the step that produced this iterate's
/// weights (absent for k = 0 and for the `1/(|x|+ε)` rules).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub w_min: f64,
    pub w_max: f64,
    pub w_mean: f64,
    pub alpha: Option<f64>,
    pub clamped: bool,
    pub lambda: Option<f64>,
    pub objective: f64,
    pub inner_iters: usize,
    pub inner_residual: f64,
    pub inner_converged: bool,
    pub l0: usize,
    pub linf_err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwTrace {
    pub records: Vec<TraceRecord>,
    pub exit: ExitReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwOutcome {
    pub x: Vec<f64>,
    pub trace: RwTrace,
    pub state: DualState,
    /// `x⁰, x¹, …` in order; the last entry equals `x`.
    pub iterates: Vec<Vec<f64>>,
}

impl RwOutcome {
    /// The iterate after `k` outer iterations; runs that exited early keep
    /// their final iterate.
    pub fn x_after(&self, k: usize) -> &[f64] {
        &self.iterates[k.min(self.iterates.len() - 1)]
    }
}

struct Run<'c, 'a> {
    ctx: &'c SolverContext<'a>,
    state: DualState,
    records: Vec<TraceRecord>,
    iterates: Vec<Vec<f64>>,
}

impl<'c, 'a> Run<'c, 'a> {
    fn start(ctx: &'c SolverContext<'a>, w: Weights, lambda: Option<f64>, rep: InnerSolveReport) -> Self {
        let mut run = Self {
            ctx,
            state: DualState { w, lambda, k: 0, x_k: Vec::new(), alpha_k: None },
            records: Vec::new(),
            iterates: Vec::new(),
        };
        run.accept(rep, None, false);
        run
    }

    fn accept(&mut self, rep: InnerSolveReport, alpha: Option<f64>, clamped: bool) {
        let w = &self.state.w;
        self.records.push(TraceRecord {
            k: self.state.k,
            w_min: w.min(),
            w_max: w.max(),
            w_mean: w.mean(),
            alpha,
            clamped,
            lambda: self.state.lambda,
            objective: rep.objective,
            inner_iters: rep.iterations,
            inner_residual: rep.primal_residual,
            inner_converged: rep.converged,
            l0: model::l0_norm(&rep.x, model::sparsity_tol(&rep.x)),
            linf_err: self.ctx.instance().x_star().map(|xs| linalg::dist_inf(&rep.x, xs)),
        });
        self.state.alpha_k = alpha;
        self.iterates.push(rep.x.clone());
        self.state.x_k = rep.x;
    }

    fn finish(self, exit: ExitReason) -> RwOutcome {
        RwOutcome {
            x: self.state.x_k.clone(),
            trace: RwTrace { records: self.records, exit },
            state: self.state,
            iterates: self.iterates,
        }
    }
}

fn basis_pursuit_at(
    ctx: &SolverContext<'_>,
    w: &Weights,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
    k: usize,
) -> Result<InnerSolveReport> {
    ctx.weighted_basis_pursuit(w, warm, cfg).map_err(|e| e.at_iteration(k))
}

fn budgeted_at(
    ctx: &SolverContext<'_>,
    w: &Weights,
    eta: f64,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
    k: usize,
) -> Result<InnerSolveReport> {
    ctx.constrained_weighted_l1(w, eta, warm, cfg).map_err(|e| e.at_iteration(k))
}

fn require_eta(inst: &ProblemInstance) -> Result<f64> {
    inst.eta().ok_or(Error::MissingEta)
}

/// Plain (weighted) ℓ1 minimization at `w⁰`. With a positive noise budget the
/// residual-budget form is solved instead of the equality-constrained one.
pub fn l1_minimization(ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<RwOutcome> {
    run(Algorithm::L1, ctx, cfg)
}

/// Projected subgradient ascent on the oracle dual, Polyak steps with target 0.
pub fn rw_l1_oracle(ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<RwOutcome> {
    run(Algorithm::Oracle, ctx, cfg)
}

fn oracle_from(ctx: &SolverContext<'_>, cfg: &SolverConfig, w0: Weights, rep: InnerSolveReport) -> Result<RwOutcome> {
    let x_star = ctx.instance().x_star().ok_or(Error::OracleRequired)?;
    let mut run = Run::start(ctx, w0, None, rep);

    for k in 0..cfg.rw_iter {
        let x = &run.state.x_k;
        let g = duality::subgradient_oracle(x, x_star)?;
        if linalg::norm_inf(&g) <= cfg.stationary_tol {
            return Ok(run.finish(ExitReason::ZeroSubgradient));
        }
        let (alpha, clamped) = match duality::polyak_step_oracle(&run.state.w, x, x_star)? {
            PolyakStep::Stationary => return Ok(run.finish(ExitReason::ZeroSubgradient)),
            PolyakStep::Step { alpha, clamped } => (alpha, clamped),
        };
        if alpha == 0.0 {
            run.state.alpha_k = Some(0.0);
            return Ok(run.finish(ExitReason::ZeroStep));
        }
        run.state.w = duality::ascent_step(&run.state.w, alpha, &g);
        let rep = basis_pursuit_at(ctx, &run.state.w, Some(&run.state.x_k), cfg, k + 1)?;
        run.state.k = k + 1;
        run.accept(rep, Some(alpha), clamped);
    }
    Ok(run.finish(ExitReason::Budget))
}

/// Projected subgradient ascent without oracle: the constraints are
/// `|xᵢ| ≤ (1 + ε_k)|x^k_i|`, giving `g = −ε_k|x^k|` and
/// `α = ‖W x^k‖₁ / (ε_k‖x^k‖₂²)`. The product `α·g` does not depend on ε_k.
pub fn rw_l1_subgradient(ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<RwOutcome> {
    run(Algorithm::RwSub, ctx, cfg)
}

fn subgradient_from(
    ctx: &SolverContext<'_>,
    cfg: &SolverConfig,
    w0: Weights,
    rep: InnerSolveReport,
) -> Result<RwOutcome> {
    let mut run = Run::start(ctx, w0, None, rep);

    for k in 0..cfg.rw_iter {
        let eps = cfg.eps_subgradient.at(k);
        let x = &run.state.x_k;
        if linalg::norm_inf(x) == 0.0 {
            return Ok(run.finish(ExitReason::ZeroIterate));
        }
        let g = duality::subgradient_nonoracle(x, eps);
        if linalg::norm_inf(&g) <= cfg.stationary_tol {
            return Ok(run.finish(ExitReason::ZeroSubgradient));
        }
        let alpha = match duality::polyak_step_nonoracle(&run.state.w, x, eps)? {
            PolyakStep::Stationary => return Ok(run.finish(ExitReason::ZeroIterate)),
            PolyakStep::Step { alpha, .. } => alpha,
        };
        if alpha == 0.0 {
            run.state.alpha_k = Some(0.0);
            return Ok(run.finish(ExitReason::ZeroStep));
        }
        run.state.w = duality::ascent_step(&run.state.w, alpha, &g);
        let rep = basis_pursuit_at(ctx, &run.state.w, Some(&run.state.x_k), cfg, k + 1)?;
        run.state.k = k + 1;
        run.accept(rep, Some(alpha), false);
    }
    Ok(run.finish(ExitReason::Budget))
}

/// `wᵢ = 1/(|xᵢ| + ε)`
pub fn cwb_weights(x: &[f64], eps: f64) -> Weights {
    Weights::from_vec_unchecked(x.iter().map(|v| 1.0 / (v.abs() + eps)).collect())
}

/// Re-weighting with `wᵢ^{k+1} = 1/(|xᵢ^k| + ε_k)` and equality constraints.
pub fn cwb_rw_l1(ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<RwOutcome> {
    run(Algorithm::RwCwb, ctx, cfg)
}

fn cwb_from(ctx: &SolverContext<'_>, cfg: &SolverConfig, w0: Weights, rep: InnerSolveReport) -> Result<RwOutcome> {
    let mut run = Run::start(ctx, w0, None, rep);
    for k in 0..cfg.rw_iter {
        run.state.w = cwb_weights(&run.state.x_k, cfg.eps_cwb.at(k));
        let rep = basis_pursuit_at(ctx, &run.state.w, Some(&run.state.x_k), cfg, k + 1)?;
        run.state.k = k + 1;
        run.accept(rep, None, false);
    }
    Ok(run.finish(ExitReason::Budget))
}

/// Re-weighting with `wᵢ^{k+1} = 1/(|xᵢ^k| + ε_k)` under the residual budget
/// `‖Φx − b‖₂ ≤ η`.
pub fn cwb_rw_l1_noisy(ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<RwOutcome> {
    run(Algorithm::CwbNoisy, ctx, cfg)
}

fn cwb_noisy_from(
    ctx: &SolverContext<'_>,
    cfg: &SolverConfig,
    w0: Weights,
    rep: InnerSolveReport,
) -> Result<RwOutcome> {
    let eta = require_eta(ctx.instance())?;
    let mut run = Run::start(ctx, w0, None, rep);
    for k in 0..cfg.rw_iter {
        run.state.w = cwb_weights(&run.state.x_k, cfg.eps_cwb.at(k));
        let rep = budgeted_at(ctx, &run.state.w, eta, Some(&run.state.x_k), cfg, k + 1)?;
        run.state.k = k + 1;
        run.accept(rep, None, false);
    }
    Ok(run.finish(ExitReason::Budget))
}

/// `λ⁰ = n / ‖z‖₁` with `z` the least-norm solution of `Φx = b`; 0 when `b = 0`.
pub fn default_lambda0(ctx: &SolverContext<'_>) -> Result<f64> {
    let z = ctx.min_l2_solution()?;
    let l1 = linalg::norm1(&z);
    Ok(if l1 > 0.0 { ctx.instance().n() as f64 / l1 } else { 0.0 })
}

/// RW-LASSO: projected subgradient ascent on the joint dual in `(w, λ)`, one
/// Polyak step shared by both multipliers, weighted LASSO inner solves.
pub fn rw_lasso_subgradient(ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<RwOutcome> {
    run(Algorithm::RwLasso, ctx, cfg)
}

fn initial_lambda(ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<f64> {
    match cfg.lambda0 {
        Some(l) => Ok(l),
        None => default_lambda0(ctx),
    }
}

fn lasso_from(ctx: &SolverContext<'_>, cfg: &SolverConfig, w0: Weights, rep: InnerSolveReport) -> Result<RwOutcome> {
    let inst = ctx.instance();
    require_eta(inst)?;
    let lambda0 = initial_lambda(ctx, cfg)?;
    let mut run = Run::start(ctx, w0, Some(lambda0), rep);

    for k in 0..cfg.rw_iter {
        let eps = cfg.eps_subgradient.at(k);
        let x = &run.state.x_k;
        let lambda = run.state.lambda.unwrap_or(lambda0);
        let g = duality::subgradient_nonoracle(x, eps);
        let g_lambda = duality::lambda_subgradient(x, inst)?;
        if linalg::norm_inf(&g).max(g_lambda.abs()) <= cfg.stationary_tol {
            return Ok(run.finish(ExitReason::ZeroSubgradient));
        }
        let (alpha, clamped) = match duality::polyak_step_lasso(&run.state.w, lambda, x, eps, g_lambda)? {
            PolyakStep::Stationary => return Ok(run.finish(ExitReason::ZeroSubgradient)),
            PolyakStep::Step { alpha, clamped } => (alpha, clamped),
        };
        if alpha == 0.0 {
            run.state.alpha_k = Some(0.0);
            return Ok(run.finish(ExitReason::ZeroStep));
        }
        run.state.w = duality::ascent_step(&run.state.w, alpha, &g);
        run.state.lambda = Some(f64::max(0.0, lambda + alpha * g_lambda));
        let rep = ctx
            .weighted_lasso_fista(&run.state.w, run.state.lambda.unwrap_or(0.0), Some(&run.state.x_k), cfg)
            .map_err(|e| e.at_iteration(k + 1))?;
        run.state.k = k + 1;
        run.accept(rep, Some(alpha), clamped);
    }
    Ok(run.finish(ExitReason::Budget))
}

pub fn run(algorithm: Algorithm, ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<RwOutcome> {
    let start = initial_solve(algorithm, ctx, cfg)?;
    run_from(algorithm, ctx, cfg, start)
}

/// The cold inner solve at `w⁰` that starts `algorithm`. `L1`, `Oracle`,
/// `RwSub` and `RwCwb` share it on noiseless instances, so callers running
/// several of them may solve once and pass the report to [`run_from`].
pub fn initial_solve(algorithm: Algorithm, ctx: &SolverContext<'_>, cfg: &SolverConfig) -> Result<InnerSolveReport> {
    cfg.validate()?;
    let inst = ctx.instance();
    let w0 = cfg.initial_weights(inst.n())?;
    match algorithm {
        Algorithm::L1 => match inst.eta() {
            Some(eta) if eta > 0.0 => budgeted_at(ctx, &w0, eta, None, cfg, 0),
            _ => basis_pursuit_at(ctx, &w0, None, cfg, 0),
        },
        Algorithm::Oracle => {
            inst.x_star().ok_or(Error::OracleRequired)?;
            basis_pursuit_at(ctx, &w0, None, cfg, 0)
        }
        Algorithm::RwSub | Algorithm::RwCwb => basis_pursuit_at(ctx, &w0, None, cfg, 0),
        Algorithm::CwbNoisy => {
            let eta = require_eta(inst)?;
            budgeted_at(ctx, &w0, eta, None, cfg, 0)
        }
        Algorithm::RwLasso => {
            require_eta(inst)?;
            let lambda0 = initial_lambda(ctx, cfg)?;
            ctx.weighted_lasso_fista(&w0, lambda0, None, cfg).map_err(|e| e.at_iteration(0))
        }
    }
}

/// Runs `algorithm` from a precomputed [`initial_solve`] report.
pub fn run_from(
    algorithm: Algorithm,
    ctx: &SolverContext<'_>,
    cfg: &SolverConfig,
    start: InnerSolveReport,
) -> Result<RwOutcome> {
    cfg.validate()?;
    let w0 = cfg.initial_weights(ctx.instance().n())?;
    crate::error::check_len(w0.len(), start.x.len())?;
    match algorithm {
        Algorithm::L1 => Ok(Run::start(ctx, w0, None, start).finish(ExitReason::Budget)),
        Algorithm::RwSub => subgradient_from(ctx, cfg, w0, start),
        Algorithm::RwCwb => cwb_from(ctx, cfg, w0, start),
        Algorithm::RwLasso => lasso_from(ctx, cfg, w0, start),
        Algorithm::CwbNoisy => cwb_noisy_from(ctx, cfg, w0, start),
        Algorithm::Oracle => oracle_from(ctx, cfg, w0, start),
    }
}

/// Label used in reports: the bare name for `l1`, `name@k` otherwise.
pub fn label(algorithm: Algorithm, rw_iter: usize) -> String {
    if algorithm.reweights() {
        alloc::format!("{}@{}", algorithm.name(), rw_iter)
    } else {
        String::from(algorithm.name())
    }
}
