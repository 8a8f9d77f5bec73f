use alloc::vec;
use alloc::vec::Vec;

use super::{soft_threshold, AffineProjector, InnerSolveReport, SolverContext};
use crate::error::{check_len, Result};
use crate::linalg::{self, Cholesky, Matrix};
use crate::model::{ProblemInstance, SolverConfig, Weights};

const RELAXATION: f64 = 1.8;
/// Iterations between attempts to certify the current support; the gap
/// doubles after each failed attempt up to `POLISH_MAX_GAP`.
const POLISH_EVERY: usize = 10;
const POLISH_MAX_GAP: usize = 320;
/// Bound on `‖Φ_S x_S − b‖₂ / (1 + ‖b‖₂)` for a polished point.
const POLISH_FEASIBILITY: f64 = 1e-11;
// residual balancing: rescale ρ when one residual dominates the other by MU
const BALANCE_MU: f64 = 10.0;
const BALANCE_TAU: f64 = 2.0;
const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
/// ρ is frozen after this many rescalings.
const BALANCE_MAX_CHANGES: usize = 50;

/// ADMM on `min Σ wᵢ|zᵢ| + I{Φx=b}(x) s.t. x = z` with scaled dual `u`.
///
/// The x-step is the affine projection of `z − u`, the z-step a weighted soft
/// threshold of `x + u` at `w/ρ`. Since the projection does not depend on ρ,
/// the penalty is rebalanced freely without refactorizing. The x-step is
/// over-relaxed.
///
/// Every few iterations the support of `z` is polished: the equality system
/// restricted to the support is solved exactly and accepted as optimal only
/// if the ADMM dual, corrected to match the signs on the support, certifies
/// it (`|Φᵢᵀν| ≤ wᵢ` off the support).
pub(super) fn weighted_basis_pursuit(
    ctx: &SolverContext<'_>,
    w: &Weights,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<InnerSolveReport> {
    let inst = ctx.instance();
    let (phi, b) = (inst.phi(), inst.b());
    let (m, n) = (inst.m(), inst.n());
    check_len(n, w.len())?;
    let proj = ctx.projector()?;
    let w = w.as_slice();

    let mut z = match warm {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut u = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut z_old = vec![0.0; n];
    let mut r = vec![0.0; m];
    let mut rho = cfg.admm_rho;
    let mut rho_changes = 0;
    let tol = cfg.inner_tol;

    let mut iterations = 0;
    let mut converged = false;
    let mut consensus = f64::INFINITY;
    let mut polish_gap = POLISH_EVERY;
    let mut next_polish = POLISH_EVERY;
    let mut last_support: Vec<usize> = Vec::new();
    while iterations < cfg.inner_max_iter {
        iterations += 1;
        for i in 0..n {
            v[i] = z[i] - u[i];
        }
        proj.project(phi, b, &v, &mut r, &mut x);
        z_old.copy_from_slice(&z);
        let inv_rho = 1.0 / rho;
        for i in 0..n {
            let xh = RELAXATION * x[i] + (1.0 - RELAXATION) * z_old[i];
            z[i] = soft_threshold(xh + u[i], w[i] * inv_rho);
            u[i] += xh - z[i];
        }

        let r_norm = linalg::dist2(&x, &z);
        let s_norm = rho * linalg::dist2(&z, &z_old);
        let scale = 1.0 + f64::max(linalg::norm2(&x), linalg::norm2(&z));
        consensus = r_norm / scale;
        let dual = s_norm / (1.0 + rho * linalg::norm2(&u));
        if consensus <= tol && dual <= tol {
            converged = true;
            break;
        }
        if iterations >= next_polish {
            let support: Vec<usize> = (0..n).filter(|&i| z[i] != 0.0 || w[i] == 0.0).collect();
            let attempt = support != last_support;
            let polished = if attempt { polish(inst, proj, w, &z, &u, rho, &support, tol) } else { None };
            if attempt && polished.is_none() {
                polish_gap = usize::min(2 * polish_gap, POLISH_MAX_GAP);
            }
            last_support = support;
            next_polish = iterations + polish_gap;
            if let Some(xp) = polished {
                let affine = inst.residual_norm(&xp) / (1.0 + linalg::norm2(b));
                return Ok(InnerSolveReport {
                    objective: linalg::weighted_l1(w, &xp),
                    x: xp,
                    iterations,
                    primal_residual: affine,
                    converged: affine <= tol,
                    degenerate: false,
                });
            }
        }

        if rho_changes >= BALANCE_MAX_CHANGES {
            continue;
        }
        if r_norm > BALANCE_MU * s_norm && rho * BALANCE_TAU <= RHO_MAX {
            rho *= BALANCE_TAU;
            rho_changes += 1;
            u.iter_mut().for_each(|ui| *ui /= BALANCE_TAU);
        } else if s_norm > BALANCE_MU * r_norm && rho / BALANCE_TAU >= RHO_MIN {
            rho /= BALANCE_TAU;
            rho_changes += 1;
            u.iter_mut().for_each(|ui| *ui *= BALANCE_TAU);
        }
    }

    if !converged {
        // report the feasible point closest to the current consensus variable
        proj.project(phi, b, &z, &mut r, &mut x);
    }
    let affine = inst.residual_norm(&x) / (1.0 + linalg::norm2(b));
    let primal_residual = f64::max(affine, consensus);
    Ok(InnerSolveReport {
        objective: linalg::weighted_l1(w, &x),
        x,
        iterations,
        primal_residual,
        converged: converged && primal_residual <= tol,
        degenerate: false,
    })
}

/// Exact solution on `support` (the nonzeros of `z` plus the zero-weight
/// coordinates, which are free), returned only with a dual
/// certificate of optimality at tolerance `tol`. If that support cannot
/// reproduce `b`, it is padded to `m` columns with the coordinates whose dual
/// ratio `|ρuᵢ|/wᵢ` is largest, giving a basic solution.
#[allow(clippy::too_many_arguments)]
fn polish(
    inst: &ProblemInstance,
    proj: &AffineProjector,
    w: &[f64],
    z: &[f64],
    u: &[f64],
    rho: f64,
    support: &[usize],
    tol: f64,
) -> Option<Vec<f64>> {
    let (m, n) = (inst.m(), inst.n());
    if support.is_empty() || support.len() > m {
        return None;
    }
    let y: Vec<f64> = u.iter().map(|ui| rho * ui).collect();
    match certify(inst, proj, w, &y, support, tol) {
        Polish::Optimal(x) => return Some(x),
        Polish::Rejected => return None,
        Polish::Infeasible if support.len() == m => return None,
        Polish::Infeasible => {}
    }
    let mut rest: Vec<(f64, usize)> =
        (0..n).filter(|&i| z[i] == 0.0 && w[i] != 0.0).map(|i| (y[i].abs() / w[i], i)).collect();
    let extra = m - support.len();
    let mut support = support.to_vec();
    if rest.len() < extra {
        return None;
    }
    rest.select_nth_unstable_by(extra - 1, |a, b| b.0.total_cmp(&a.0));
    support.extend(rest[..extra].iter().map(|&(_, i)| i));
    support.sort_unstable();
    match certify(inst, proj, w, &y, &support, tol) {
        Polish::Optimal(x) => Some(x),
        _ => None,
    }
}

enum Polish {
    Optimal(Vec<f64>),
    Infeasible,
    Rejected,
}

fn certify(
    inst: &ProblemInstance,
    proj: &AffineProjector,
    w: &[f64],
    y: &[f64],
    support: &[usize],
    tol: f64,
) -> Polish {
    let (phi, b) = (inst.phi(), inst.b());
    let (m, n) = (inst.m(), inst.n());
    let k = support.len();
    // rows of `cols` are the support columns of Φ
    let mut cols = Matrix::zeros(k, m);
    for (r, &j) in support.iter().enumerate() {
        for i in 0..m {
            cols.set(r, i, phi.get(i, j));
        }
    }
    let Ok(normal) = Cholesky::factor(&cols.gram_rows()) else {
        return Polish::Rejected;
    };
    let mut xs = cols.mul_vec(b);
    normal.solve_in_place(&mut xs);

    let mut x = vec![0.0; n];
    for (&j, &v) in support.iter().zip(&xs) {
        x[j] = v;
    }
    if inst.residual_norm(&x) > POLISH_FEASIBILITY * (1.0 + linalg::norm2(b)) {
        return Polish::Infeasible;
    }

    // ν from the ADMM dual y, which lies near range(Φᵀ), then the least-norm
    // correction enforcing Φ_Sᵀν = w_S·sign(x_S)
    let mut nu = proj.solve.mul_vec(y);
    let target: Vec<f64> =
        support.iter().zip(&xs).map(|(&j, &v)| if v == 0.0 { 0.0 } else { w[j] * v.signum() }).collect();
    let mut gap: Vec<f64> = target.iter().zip(cols.mul_vec(&nu)).map(|(t, c)| t - c).collect();
    normal.solve_in_place(&mut gap);
    linalg::axpy(1.0, &cols.tr_mul_vec(&gap), &mut nu);

    let corr = phi.tr_mul_vec(&nu);
    let mut on_support = vec![false; n];
    support.iter().for_each(|&j| on_support[j] = true);
    let certified = (0..n).all(|j| on_support[j] || corr[j].abs() <= w[j] + tol * (1.0 + w[j]));
    if certified {
        Polish::Optimal(x)
    } else {
        Polish::Rejected
    }
}
