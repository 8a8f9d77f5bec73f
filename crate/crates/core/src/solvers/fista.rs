use alloc::vec;
use alloc::vec::Vec;

use super::{soft_threshold, InnerSolveReport, SolverContext};
use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Cholesky, Matrix};
use crate::model::{SolverConfig, Weights};

/// Objective decrease is measured over this many iterations for the stall test.
const STALL_WINDOW: usize = 10;
/// Inflation of the power-iteration estimate of `‖Φ‖₂²`, which approaches
/// the true value from below.
const LIPSCHITZ_SAFETY: f64 = 1.0 + 1e-9;

/// Worst violation of the optimality conditions of the weighted LASSO,
/// `0 ∈ λΦᵀ(Φx − b) + W·∂|x|`, given `grad = Φᵀ(Φx − b)`.
pub(crate) fn optimality_residual(x: &[f64], grad: &[f64], w: &[f64], lambda: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let g = lambda * grad[i];
        let v =
            if x[i] != 0.0 { (g + w[i] * x[i].signum()).abs() / (1.0 + w[i]) } else { f64::max(g.abs() - w[i], 0.0) };
        worst = worst.max(v);
    }
    worst
}

fn objective(resid: &[f64], w: &[f64], x: &[f64], lambda: f64) -> f64 {
    0.5 * lambda * linalg::dot(resid, resid) + linalg::weighted_l1(w, x)
}

/// Iterate with its residual `Φx − b` and `Φᵀ(Φx − b)` carried along, so
/// that momentum extrapolation needs no extra products with Φ.
#[derive(Clone)]
struct Point {
    x: Vec<f64>,
    resid: Vec<f64>,
    grad: Vec<f64>,
}

impl Point {
    fn at(ctx: &SolverContext<'_>, x: Vec<f64>) -> Self {
        let inst = ctx.instance();
        let mut resid = inst.phi().mul_vec(&x);
        for (r, b) in resid.iter_mut().zip(inst.b()) {
            *r -= b;
        }
        let grad = inst.phi().tr_mul_vec(&resid);
        Self { x, resid, grad }
    }

    fn extrapolate_into(&self, prev: &Point, beta: f64, out: &mut Point) {
        let lerp = |a: &[f64], b: &[f64], o: &mut [f64]| {
            for ((oi, ai), bi) in o.iter_mut().zip(a).zip(b) {
                *oi = ai + beta * (ai - bi);
            }
        };
        lerp(&self.x, &prev.x, &mut out.x);
        lerp(&self.resid, &prev.resid, &mut out.resid);
        lerp(&self.grad, &prev.grad, &mut out.grad);
    }
}

pub(super) fn weighted_lasso(
    ctx: &SolverContext<'_>,
    w: &Weights,
    lambda: f64,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<InnerSolveReport> {
    let inst = ctx.instance();
    let n = inst.n();
    check_len(n, w.len())?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Config(alloc::format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let w = w.as_slice();
    let phi_sq = ctx.phi_norm_sq();

    if lambda == 0.0 || phi_sq == 0.0 {
        // the data term is constant, so 0 minimizes Σ wᵢ|xᵢ|; coordinates
        // with wᵢ = 0 are then free
        let x = vec![0.0; n];
        let resid: Vec<f64> = inst.b().iter().map(|b| -b).collect();
        return Ok(InnerSolveReport {
            objective: objective(&resid, w, &x, lambda),
            x,
            iterations: 0,
            primal_residual: 0.0,
            converged: true,
            degenerate: w.contains(&0.0),
        });
    }

    let x0 = match warm {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let lip = lambda * phi_sq * LIPSCHITZ_SAFETY;
    let inv_phi_sq = 1.0 / (phi_sq * LIPSCHITZ_SAFETY);
    let thresh: Vec<f64> = w.iter().map(|wi| wi / lip).collect();

    let mut cur = Point::at(ctx, x0);
    let mut obj = objective(&cur.resid, w, &cur.x, lambda);
    let mut residual = optimality_residual(&cur.x, &cur.grad, w, lambda);
    let mut y = cur.clone();
    let mut next = cur.clone();
    let mut t = 1.0;
    let mut history: Vec<f64> = Vec::with_capacity(STALL_WINDOW + 1);
    history.push(obj);

    let mut iterations = 0;
    let mut stalled = false;
    while residual > cfg.inner_tol && iterations < cfg.inner_max_iter {
        iterations += 1;
        // prox-gradient step from y: the gradient of the data term is λ·Φᵀ(Φy − b)
        for (((xi, yi), gi), ti) in next.x.iter_mut().zip(&y.x).zip(&y.grad).zip(&thresh) {
            *xi = soft_threshold(yi - gi * inv_phi_sq, *ti);
        }
        inst.phi().mul_vec_into(&next.x, &mut next.resid);
        for (r, b) in next.resid.iter_mut().zip(inst.b()) {
            *r -= b;
        }
        inst.phi().tr_mul_vec_into(&next.resid, &mut next.grad);
        let next_obj = objective(&next.resid, w, &next.x, lambda);

        if next_obj > obj && t > 1.0 {
            // adaptive restart: drop the momentum and retry from the last iterate
            t = 1.0;
            y.clone_from(&cur);
            continue;
        }

        let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        let beta = (t - 1.0) / t_next;
        next.extrapolate_into(&cur, beta, &mut y);
        core::mem::swap(&mut cur, &mut next);
        t = t_next;
        obj = next_obj;
        residual = optimality_residual(&cur.x, &cur.grad, w, lambda);

        if history.len() > STALL_WINDOW {
            history.remove(0);
        }
        history.push(obj);
        if history.len() > STALL_WINDOW {
            let drop = history[0] - obj;
            if drop.abs() <= cfg.inner_tol * f64::max(obj.abs(), f64::MIN_POSITIVE) {
                stalled = true;
                break;
            }
        }
    }
    if residual > cfg.inner_tol && (stalled || iterations == cfg.inner_max_iter) {
        if let Some(p) = polish(ctx, w, lambda, &cur.x) {
            let r = optimality_residual(&p.x, &p.grad, w, lambda);
            if r < residual {
                obj = objective(&p.resid, w, &p.x, lambda);
                residual = r;
                cur = p;
            }
        }
    }

    Ok(InnerSolveReport {
        objective: obj,
        converged: residual <= cfg.inner_tol,
        primal_residual: residual,
        x: cur.x,
        iterations,
        degenerate: false,
    })
}

/// Stationary point of the smooth problem obtained by fixing the support and
/// signs of `x`: `λΦ_Sᵀ(Φ_S x_S − b) + w_S·sign(x_S) = 0`. Returned only if
/// the signs are reproduced; the caller checks the full optimality residual.
fn polish(ctx: &SolverContext<'_>, w: &[f64], lambda: f64, x: &[f64]) -> Option<Point> {
    let inst = ctx.instance();
    let (phi, b) = (inst.phi(), inst.b());
    let (m, n) = (inst.m(), inst.n());
    let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
    let k = support.len();
    if k == 0 || k > m {
        return None;
    }
    // rows of `cols` are the support columns of Φ
    let mut cols = Matrix::zeros(k, m);
    for (r, &j) in support.iter().enumerate() {
        for i in 0..m {
            cols.set(r, i, phi.get(i, j));
        }
    }
    let normal = Cholesky::factor(&cols.gram_rows()).ok()?;
    let mut xs = cols.mul_vec(b);
    for (v, &j) in xs.iter_mut().zip(&support) {
        *v -= w[j] * x[j].signum() / lambda;
    }
    normal.solve_in_place(&mut xs);
    if support.iter().zip(&xs).any(|(&j, v)| v.signum() != x[j].signum() || *v == 0.0) {
        return None;
    }
    let mut full = vec![0.0; n];
    for (&j, &v) in support.iter().zip(&xs) {
        full[j] = v;
    }
    Some(Point::at(ctx, full))
}
