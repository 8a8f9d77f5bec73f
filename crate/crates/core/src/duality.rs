//! Lagrange machinery: dual function values, subgradients, Polyak steps and
//! the projection onto `w ≥ 0`.
//!
//! Relaxing the per-coordinate constraints `|xᵢ| ≤ cᵢ` of the feasibility
//! problem `{Φx = b, |xᵢ| ≤ cᵢ}` gives the dual function
//!
//! ```text
//! d(w) = min_{Φx=b} Σ wᵢ|xᵢ|  −  Σ wᵢ cᵢ ,
//! ```
//!
//! whose inner problem is weighted basis pursuit. With `x^w` its minimizer,
//! `gᵢ = |x^w_i| − cᵢ` is a supergradient of `d` at `w`. The oracle case uses
//! `c = |x*|`; the non-oracle case uses the amplified current iterate
//! `c = (1 + ε)|x^k|`. In both the primal optimal value is 0, which is the
//! Polyak target.

use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::model::{ProblemInstance, SolverConfig, Weights};
use crate::solvers::{InnerSolveReport, SolverContext};

/// Dual value, the inner minimizer that produced it, and a supergradient.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub subgradient: Vec<f64>,
    pub inner: InnerSolveReport,
}

/// Outcome of a Polyak step-size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolyakStep {
    /// A usable step. `clamped` is set when the raw formula was negative and
    /// the step was replaced by 0.
    Step { alpha: f64, clamped: bool },
    /// The subgradient (or the denominator) vanished; the ascent stops here.
    Stationary,
}

impl PolyakStep {
    pub fn alpha(self) -> Option<f64> {
        match self {
            PolyakStep::Step { alpha, .. } => Some(alpha),
            PolyakStep::Stationary => None,
        }
    }
}

/// Oracle dual function `d(w) = min_{Φx=b} Σ wᵢ|xᵢ| − Σ wᵢ|x*ᵢ|`.
pub fn dual_function_oracle(
    w: &Weights,
    ctx: &SolverContext<'_>,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<DualEvaluation> {
    let x_star = ctx.instance().x_star().ok_or(Error::OracleRequired)?;
    check_len(x_star.len(), w.len())?;
    let inner = ctx.weighted_basis_pursuit(w, warm, cfg)?;
    let value = linalg::weighted_l1(w.as_slice(), &inner.x) - linalg::weighted_l1(w.as_slice(), x_star);
    let subgradient = subgradient_oracle(&inner.x, x_star)?;
    Ok(DualEvaluation { value, minimizer: inner.x.clone(), subgradient, inner })
}

/// Convenience wrapper building a fresh [`SolverContext`].
pub fn dual_function_oracle_at(w: &Weights, instance: &ProblemInstance, cfg: &SolverConfig) -> Result<DualEvaluation> {
    dual_function_oracle(w, &SolverContext::new(instance), None, cfg)
}

/// `gᵢ = |x_kᵢ| − |x*ᵢ|`
pub fn subgradient_oracle(x_k: &[f64], x_star: &[f64]) -> Result<Vec<f64>> {
    check_len(x_star.len(), x_k.len())?;
    Ok(x_k.iter().zip(x_star).map(|(a, s)| a.abs() - s.abs()).collect())
}

/// `gᵢ = |x_kᵢ| − (1 + ε)|x_kᵢ| = −ε|x_kᵢ|`
pub fn subgradient_nonoracle(x_k: &[f64], eps: f64) -> Vec<f64> {
    x_k.iter().map(|v| -eps * v.abs()).collect()
}

/// Polyak step for the oracle dual with target `d* = 0`:
/// `α = −Σ wᵢ(|xᵢ| − |x*ᵢ|) / Σ (|xᵢ| − |x*ᵢ|)²`, clamped at 0.
pub fn polyak_step_oracle(w_k: &Weights, x_k: &[f64], x_star: &[f64]) -> Result<PolyakStep> {
    check_len(w_k.len(), x_k.len())?;
    let g = subgradient_oracle(x_k, x_star)?;
    let denom = linalg::dot(&g, &g);
    if denom == 0.0 {
        return Ok(PolyakStep::Stationary);
    }
    let alpha = -linalg::dot(w_k.as_slice(), &g) / denom;
    Ok(clamp(alpha))
}

/// Polyak step for the non-oracle dual at iteration k:
/// `α = (1/ε)·‖W x‖₁ / ‖x‖₂²`. Never negative.
pub fn polyak_step_nonoracle(w_k: &Weights, x_k: &[f64], eps: f64) -> Result<PolyakStep> {
    check_len(w_k.len(), x_k.len())?;
    let sq = linalg::dot(x_k, x_k);
    if sq == 0.0 {
        return Ok(PolyakStep::Stationary);
    }
    let alpha = linalg::weighted_l1(w_k.as_slice(), x_k) / (eps * sq);
    Ok(PolyakStep::Step { alpha, clamped: false })
}

/// Coordinate-wise `max(0, wᵢ)`. NaN entries map to 0.
pub fn project_nonneg(w: &[f64]) -> Weights {
    Weights::from_vec_unchecked(w.iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect())
}

/// `g_λ = ½(‖Φx − b‖₂² − η²)`, the supergradient in the multiplier of the
/// quadratic constraint.
pub fn lambda_subgradient(x_k: &[f64], instance: &ProblemInstance) -> Result<f64> {
    let eta = instance.eta().ok_or(Error::MissingEta)?;
    check_len(instance.n(), x_k.len())?;
    let r = instance.residual_norm(x_k);
    Ok(0.5 * (r * r - eta * eta))
}

/// Polyak step on the joint `(w, λ)` dual with target 0. The supergradient is
/// `(−ε|x|, g_λ)` and the Lagrangian at the current point is
/// `−ε‖W x‖₁ + λ g_λ`, so
/// `α = (ε‖W x‖₁ − λ g_λ) / (ε²‖x‖₂² + g_λ²)`, clamped at 0.
pub fn polyak_step_lasso(w_k: &Weights, lambda_k: f64, x_k: &[f64], eps: f64, g_lambda: f64) -> Result<PolyakStep> {
    check_len(w_k.len(), x_k.len())?;
    let denom = eps * eps * linalg::dot(x_k, x_k) + g_lambda * g_lambda;
    if denom == 0.0 {
        return Ok(PolyakStep::Stationary);
    }
    let num = eps * linalg::weighted_l1(w_k.as_slice(), x_k) - lambda_k * g_lambda;
    Ok(clamp(num / denom))
}

fn clamp(alpha: f64) -> PolyakStep {
    if alpha >= 0.0 {
        PolyakStep::Step { alpha, clamped: false }
    } else {
        PolyakStep::Step { alpha: 0.0, clamped: true }
    }
}

/// `project_nonneg(w + α·g)`
pub fn ascent_step(w: &Weights, alpha: f64, g: &[f64]) -> Weights {
    let raw: Vec<f64> = w.as_slice().iter().zip(g).map(|(wi, gi)| wi + alpha * gi).collect();
    project_nonneg(&raw)
}
