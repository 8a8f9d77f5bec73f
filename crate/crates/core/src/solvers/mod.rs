//! Inner convex solvers called at every outer re-weighting iteration.
//!
//! All solvers work on a [`SolverContext`], which owns the per-instance
//! factorizations: the Cholesky factor of `ΦΦᵀ` together with the matrix
//! `(ΦΦᵀ)⁻¹Φ` used for affine projections, and `‖Φ‖₂²` for FISTA steps. Both
//! are computed on first use and reused by every later solve on the same
//! instance.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::linalg::{self, Cholesky, Matrix};
use crate::model::{ProblemInstance, SolverConfig, Weights};

mod admm;
mod constrained;
mod fista;

pub use constrained::MAX_BRACKET_DOUBLINGS;

/// Result of one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Solver-specific stopping residual; `converged` implies it is `<= inner_tol`.
    pub primal_residual: f64,
    pub objective: f64,
    pub converged: bool,
    /// Set when the problem is unbounded or has a free direction the solver
    /// had to resolve arbitrarily (λ = 0 with some zero weight).
    pub degenerate: bool,
}

/// Affine projection onto `{x : Φx = b}`.
#[derive(Debug, Clone)]
pub(crate) struct AffineProjector {
    chol: Cholesky,
    /// `(ΦΦᵀ)⁻¹Φ`, so that `Φ⁺ r = solveᵀ·r`.
    pub(crate) solve: Matrix,
}

impl AffineProjector {
    fn new(phi: &Matrix) -> Result<Self> {
        let chol = Cholesky::factor(&phi.gram_rows())?;
        let (m, n) = (phi.rows(), phi.cols());
        let mut solve = Matrix::zeros(m, n);
        let mut col = vec![0.0; m];
        for j in 0..n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = phi.get(i, j);
            }
            chol.solve_in_place(&mut col);
            for (i, c) in col.iter().enumerate() {
                solve.set(i, j, *c);
            }
        }
        Ok(Self { chol, solve })
    }

    /// `out = v − Φᵀ(ΦΦᵀ)⁻¹(Φv − b)`; `r` is scratch of length m.
    pub(crate) fn project(&self, phi: &Matrix, b: &[f64], v: &[f64], r: &mut [f64], out: &mut [f64]) {
        phi.mul_vec_into(v, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= bi;
        }
        self.solve.tr_mul_vec_into(r, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = vi - *o;
        }
    }

    /// `Φᵀ(ΦΦᵀ)⁻¹ b` with one step of iterative refinement.
    fn least_norm(&self, phi: &Matrix, b: &[f64]) -> Vec<f64> {
        let mut z = self.solve.tr_mul_vec(b);
        let r: Vec<f64> = b.iter().zip(phi.mul_vec(&z)).map(|(bi, pz)| bi - pz).collect();
        linalg::axpy(1.0, &self.solve.tr_mul_vec(&r), &mut z);
        z
    }
}

/// Per-instance solver state with lazily built, cached factorizations.
#[derive(Debug)]
pub struct SolverContext<'a> {
    instance: &'a ProblemInstance,
    projector: OnceCell<Result<AffineProjector>>,
    phi_norm_sq: OnceCell<f64>,
}

impl<'a> SolverContext<'a> {
    pub fn new(instance: &'a ProblemInstance) -> Self {
        Self { instance, projector: OnceCell::new(), phi_norm_sq: OnceCell::new() }
    }

    #[inline]
    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub(crate) fn projector(&self) -> Result<&AffineProjector> {
        self.projector.get_or_init(|| AffineProjector::new(self.instance.phi())).as_ref().map_err(Clone::clone)
    }

    /// `‖Φ‖₂²`, the largest eigenvalue of `ΦᵀΦ`.
    pub fn phi_norm_sq(&self) -> f64 {
        *self.phi_norm_sq.get_or_init(|| spectral_norm_sq(self.instance.phi()))
    }

    /// Minimum ℓ2-norm solution of `Φx = b`.
    pub fn min_l2_solution(&self) -> Result<Vec<f64>> {
        let p = self.projector()?;
        Ok(p.least_norm(self.instance.phi(), self.instance.b()))
    }

    /// Cholesky factor of `ΦΦᵀ`.
    pub fn gram_factor(&self) -> Result<&Cholesky> {
        Ok(&self.projector()?.chol)
    }

    /// `min Σ wᵢ|xᵢ| s.t. Φx = b`, by ADMM on the split `x = z`.
    pub fn weighted_basis_pursuit(
        &self,
        w: &Weights,
        warm: Option<&[f64]>,
        cfg: &SolverConfig,
    ) -> Result<InnerSolveReport> {
        admm::weighted_basis_pursuit(self, w, warm, cfg)
    }

    /// `min (λ/2)‖Φx − b‖₂² + Σ wᵢ|xᵢ|`, by FISTA with adaptive restart.
    pub fn weighted_lasso_fista(
        &self,
        w: &Weights,
        lambda: f64,
        warm: Option<&[f64]>,
        cfg: &SolverConfig,
    ) -> Result<InnerSolveReport> {
        fista::weighted_lasso(self, w, lambda, warm, cfg)
    }

    /// `min Σ wᵢ|xᵢ| s.t. ½‖Φx − b‖₂² ≤ η²/2`, by bisection on the LASSO
    /// multiplier.
    pub fn constrained_weighted_l1(
        &self,
        w: &Weights,
        eta: f64,
        warm: Option<&[f64]>,
        cfg: &SolverConfig,
    ) -> Result<InnerSolveReport> {
        constrained::constrained_weighted_l1(self, w, eta, warm, cfg)
    }
}

pub fn weighted_basis_pursuit(
    instance: &ProblemInstance,
    w: &Weights,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<InnerSolveReport> {
    SolverContext::new(instance).weighted_basis_pursuit(w, warm, cfg)
}

pub fn weighted_lasso_fista(
    instance: &ProblemInstance,
    w: &Weights,
    lambda: f64,
    warm: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<InnerSolveReport> {
    SolverContext::new(instance).weighted_lasso_fista(w, lambda, warm, cfg)
}

pub fn constrained_weighted_l1(
    instance: &ProblemInstance,
    w: &Weights,
    eta: f64,
    cfg: &SolverConfig,
) -> Result<InnerSolveReport> {
    SolverContext::new(instance).constrained_weighted_l1(w, eta, None, cfg)
}

pub fn min_l2_solution(instance: &ProblemInstance) -> Result<Vec<f64>> {
    SolverContext::new(instance).min_l2_solution()
}

/// Proximal operator of `t·|·|`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

const POWER_MAX_ITER: usize = 20_000;
const POWER_REL_TOL: f64 = 1e-14;
const POWER_SEED: u64 = 0x005e_ed0f_90e7;

/// Largest eigenvalue of `ΦᵀΦ` by power iteration on the smaller Gram matrix,
/// started from a fixed pseudo-random vector.
pub fn spectral_norm_sq(phi: &Matrix) -> f64 {
    let gram = if phi.rows() <= phi.cols() { phi.gram_rows() } else { phi.transpose().gram_rows() };
    let k = gram.rows();
    if k == 0 || gram.as_slice().iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(POWER_SEED);
    let mut v: Vec<f64> = (0..k).map(|_| 0.5 + (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64).collect();
    let nv = linalg::norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![0.0; k];
    let mut mu = 0.0;
    for _ in 0..POWER_MAX_ITER {
        gram.mul_vec_into(&v, &mut av);
        let next = linalg::dot(&v, &av);
        let norm = linalg::norm2(&av);
        if norm == 0.0 {
            break;
        }
        for (vi, ai) in v.iter_mut().zip(&av) {
            *vi = ai / norm;
        }
        let done = (next - mu).abs() <= POWER_REL_TOL * next;
        mu = next;
        if done {
            break;
        }
    }
    mu
}
