use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{InnerSolveReport, SolverContext};
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::model::{SolverConfig, Weights};

/// Doublings (or halvings) of λ tried while looking for a bracket.
pub const MAX_BRACKET_DOUBLINGS: usize = 60;
const MIN_BRACKET_WIDTH: f64 = 1e-12;

struct Probe {
    lambda: f64,
    resid_norm: f64,
    report: InnerSolveReport,
}

/// Weighted ℓ1 under a residual budget. The LASSO path `x(λ)` has residual
/// `‖Φx(λ) − b‖₂` nonincreasing in λ; bisection looks for the λ where the
/// residual meets η.
pub(super) fn constrained_weighted_l1(
    ctx: &SolverContext<'_>,
    w: &Weights,
    eta: f64,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<InnerSolveReport> {
    let inst = ctx.instance();
    let n = inst.n();
    check_len(n, w.len())?;
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::Config(format!("eta must be finite and >= 0, got {eta}")));
    }
    if eta == 0.0 {
        return ctx.weighted_basis_pursuit(w, warm, cfg);
    }
    if linalg::norm2(inst.b()) <= eta {
        // x = 0 is feasible and the objective is nonnegative
        return Ok(InnerSolveReport {
            x: vec![0.0; n],
            iterations: 0,
            primal_residual: 0.0,
            objective: 0.0,
            converged: true,
            degenerate: false,
        });
    }

    let target = |r: f64| (r - eta).abs() <= cfg.bisect_tol * eta;
    let mut total_iters = 0usize;
    let mut last_x: Option<Vec<f64>> = warm.map(<[f64]>::to_vec);
    let mut probe = |lambda: f64| -> Result<Probe> {
        let report = ctx.weighted_lasso_fista(w, lambda, last_x.as_deref(), cfg)?;
        total_iters += report.iterations;
        last_x = Some(report.x.clone());
        Ok(Probe { lambda, resid_norm: inst.residual_norm(&report.x), report })
    };

    let first = probe(1.0)?;
    if target(first.resid_norm) {
        return Ok(finish(first, total_iters, true, cfg));
    }

    // [lo, hi] with residual(lo) > η >= residual(hi)
    let (mut lo, mut hi) = if first.resid_norm > eta {
        let mut lo = first;
        let mut found = None;
        for _ in 0..MAX_BRACKET_DOUBLINGS {
            let p = probe(lo.lambda * 2.0)?;
            if target(p.resid_norm) {
                return Ok(finish(p, total_iters, true, cfg));
            }
            if p.resid_norm <= eta {
                found = Some(p);
                break;
            }
            lo = p;
        }
        let hi = found.ok_or(Error::NoBracket { doublings: MAX_BRACKET_DOUBLINGS })?;
        (lo, hi)
    } else {
        let mut hi = first;
        let mut found = None;
        for _ in 0..MAX_BRACKET_DOUBLINGS {
            let p = probe(hi.lambda * 0.5)?;
            if target(p.resid_norm) {
                return Ok(finish(p, total_iters, true, cfg));
            }
            if p.resid_norm > eta {
                found = Some(p);
                break;
            }
            hi = p;
        }
        let lo = found.ok_or(Error::NoBracket { doublings: MAX_BRACKET_DOUBLINGS })?;
        (lo, hi)
    };

    while hi.lambda - lo.lambda > MIN_BRACKET_WIDTH * hi.lambda {
        let mid = libm::sqrt(lo.lambda * hi.lambda);
        let p = probe(mid)?;
        if target(p.resid_norm) {
            return Ok(finish(p, total_iters, true, cfg));
        }
        if p.resid_norm > eta {
            lo = p;
        } else {
            hi = p;
        }
    }
    // bracket collapsed without meeting the tolerance: return the feasible end
    let _ = lo;
    Ok(finish(hi, total_iters, false, cfg))
}

fn finish(p: Probe, iterations: usize, met: bool, cfg: &SolverConfig) -> InnerSolveReport {
    let mut report = p.report;
    report.iterations = iterations;
    report.converged = met && report.primal_residual <= cfg.inner_tol;
    // objective of the constrained problem is the weighted ℓ1 part alone
    let data = 0.5 * p.lambda * p.resid_norm * p.resid_norm;
    report.objective -= data;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::ProblemInstance;
    use approx::assert_relative_eq;

    fn scalar(b: f64) -> ProblemInstance {
        ProblemInstance::new(Matrix::from_rows(&[[1.0]]).unwrap(), vec![b], 0).unwrap()
    }

    #[test]
    fn scalar_budget() {
        // min |x| s.t. |x − 3| <= 1 is attained at the boundary point 2
        let grid_best = (0..=40_000)
            .map(|k| 2.0 + k as f64 * 1e-4)
            .filter(|x| (x - 3.0f64).abs() <= 1.0)
            .fold(f64::INFINITY, f64::min);
        let i = scalar(3.0);
        let rep =
            constrained_weighted_l1(&SolverContext::new(&i), &Weights::ones(1), 1.0, None, &SolverConfig::default())
                .unwrap();
        assert!(rep.converged);
        assert_relative_eq!(rep.x[0], grid_best, epsilon = 3e-3);
        assert_relative_eq!(rep.objective, rep.x[0].abs(), epsilon = 1e-9);
    }

    #[test]
    fn large_budget_gives_zero() {
        let i = ProblemInstance::new(Matrix::from_rows(&[[1.0, 2.0]]).unwrap(), vec![3.0], 0).unwrap();
        let rep =
            constrained_weighted_l1(&SolverContext::new(&i), &Weights::ones(2), 3.0, None, &SolverConfig::default())
                .unwrap();
        assert_eq!(rep.x, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_budget_is_basis_pursuit() {
        let i =
            ProblemInstance::new(Matrix::from_rows(&[[1.0, 1.0, 0.2], [0.0, 1.0, -1.0]]).unwrap(), vec![1.0, 0.5], 0)
                .unwrap();
        let ctx = SolverContext::new(&i);
        let cfg = SolverConfig::default();
        let w = Weights::new(vec![1.0, 2.0, 0.5]).unwrap();
        let a = constrained_weighted_l1(&ctx, &w, 0.0, None, &cfg).unwrap();
        let b = ctx.weighted_basis_pursuit(&w, None, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_budget_rejected() {
        let i = scalar(3.0);
        assert!(constrained_weighted_l1(
            &SolverContext::new(&i),
            &Weights::ones(1),
            -0.1,
            None,
            &SolverConfig::default()
        )
        .is_err());
    }
}
