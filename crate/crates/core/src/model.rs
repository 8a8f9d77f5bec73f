//! Problem instances, weights, solver configuration and the shared metrics.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Matrix};

/// Relative tolerance used when counting nonzeros of solver output.
pub const SPARSITY_REL_TOL: f64 = 1e-6;

/// Default ℓ∞ threshold for declaring the ground truth recovered.
pub const DEFAULT_RECOVERY_TOL: f64 = 1e-3;

/// Tolerance on `‖Φx* − b‖₂ / (1 + ‖b‖₂)` for noiseless instances.
const CONSISTENCY_TOL: f64 = 1e-10;

/// A linear system `Φx = b`, optionally with its sparse ground truth and a
/// noise description.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    phi: Matrix,
    b: Vec<f64>,
    x_star: Option<Vec<f64>>,
    sigma: Option<f64>,
    eta: Option<f64>,
    seed: u64,
}

impl ProblemInstance {
    /// Shape and finiteness are checked here; the `m < n` requirement of the
    /// random ensembles is enforced by [`crate::probgen`], so small square
    /// systems remain usable in tests.
    pub fn new(phi: Matrix, b: Vec<f64>, seed: u64) -> Result<Self> {
        check_len(phi.rows(), b.len())?;
        if phi.rows() > phi.cols() {
            return Err(Error::Config(format!("overdetermined system: {} rows > {} columns", phi.rows(), phi.cols())));
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite("phi"));
        }
        if !b.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("b"));
        }
        Ok(Self { phi, b, x_star: None, sigma: None, eta: None, seed })
    }

    pub fn with_ground_truth(mut self, x_star: Vec<f64>) -> Result<Self> {
        check_len(self.n(), x_star.len())?;
        if !x_star.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("x_star"));
        }
        self.x_star = Some(x_star);
        self.check_consistency()?;
        Ok(self)
    }

    /// Attaches a noise level. `eta` is the residual budget `‖Φx − b‖₂ ≤ η`.
    pub fn with_noise(mut self, sigma: Option<f64>, eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::Config(format!("eta must be finite and >= 0, got {eta}")));
        }
        if let Some(s) = sigma {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::Config(format!("sigma must be finite and >= 0, got {s}")));
            }
        }
        self.sigma = sigma;
        self.eta = Some(eta);
        Ok(self)
    }

    fn check_consistency(&self) -> Result<()> {
        if let (Some(x), None) = (&self.x_star, self.eta) {
            let r = linalg::dist2(&self.phi.mul_vec(x), &self.b);
            if r > CONSISTENCY_TOL * (1.0 + linalg::norm2(&self.b)) {
                return Err(Error::Config(format!(
                    "x_star is inconsistent with the noiseless system (residual {r:e})"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn phi(&self) -> &Matrix {
        &self.phi
    }

    #[inline]
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    #[inline]
    pub fn x_star(&self) -> Option<&[f64]> {
        self.x_star.as_deref()
    }

    #[inline]
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    #[inline]
    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.phi.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.phi.cols()
    }

    /// `‖Φx − b‖₂`
    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        linalg::dist2(&self.phi.mul_vec(x), &self.b)
    }

    /// FNV-1a over the bit patterns of every field; used to check that paired
    /// runs really see the same instance.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |v: u64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.m() as u64);
        feed(self.n() as u64);
        self.phi.as_slice().iter().for_each(|v| feed(v.to_bits()));
        self.b.iter().for_each(|v| feed(v.to_bits()));
        if let Some(x) = &self.x_star {
            x.iter().for_each(|v| feed(v.to_bits()));
        }
        feed(self.sigma.map_or(u64::MAX, f64::to_bits));
        feed(self.eta.map_or(u64::MAX, f64::to_bits));
        feed(self.seed);
        h
    }
}

/// Nonnegative weights; the multipliers of the relaxed `|xᵢ| ≤ …` constraints.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Config(format!("weights must be finite and nonnegative, got {bad}")));
        }
        Ok(Self(w))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Caller guarantees every entry is finite and `>= 0`.
    pub(crate) fn from_vec_unchecked(w: Vec<f64>) -> Self {
        debug_assert!(w.iter().all(|v| *v >= 0.0 && v.is_finite()));
        Self(w)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().sum::<f64>() / self.0.len() as f64
        }
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;
    fn try_from(w: Vec<f64>) -> Result<Self> {
        Weights::new(w)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Self {
        w.0
    }
}

/// State of a projected subgradient run on the dual.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub w: Weights,
    /// Multiplier of the quadratic constraint; `None` in noiseless runs.
    pub lambda: Option<f64>,
    pub k: usize,
    /// Latest inner minimizer.
    pub x_k: Vec<f64>,
    pub alpha_k: Option<f64>,
}

/// Per-iteration amplification `ε_k`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum EpsSchedule {
    Constant(f64),
    /// `ε_k = seq[k]`, the last entry repeating once the list is exhausted.
    Sequence(Vec<f64>),
}

impl EpsSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            EpsSchedule::Constant(e) => *e,
            EpsSchedule::Sequence(s) => s.get(k).or(s.last()).copied().unwrap_or(f64::NAN),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            EpsSchedule::Constant(e) => *e > 0.0 && e.is_finite(),
            EpsSchedule::Sequence(s) => !s.is_empty() && s.iter().all(|e| *e > 0.0 && e.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{name} must be a nonempty positive schedule")))
        }
    }
}

/// Tolerances, budgets and step parameters shared by every algorithm.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverConfig {
    /// Outer re-weighting iterations (`RWIter`).
    pub rw_iter: usize,
    /// `ε_k` of the subgradient algorithms.
    pub eps_subgradient: EpsSchedule,
    /// `ε_k` of the `1/(|x|+ε)` baselines.
    pub eps_cwb: EpsSchedule,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Initial ADMM penalty.
    pub admm_rho: f64,
    pub recovery_tol: f64,
    /// Relative tolerance on `‖Φx − b‖₂ − η` in the multiplier bisection.
    pub bisect_tol: f64,
    /// A subgradient with `‖g‖∞` below this is treated as zero.
    pub stationary_tol: f64,
    /// Initial weights; all ones when absent.
    pub w0: Option<Vec<f64>>,
    /// Initial LASSO multiplier; `n/‖z‖₁` (z the least-norm solution) when absent.
    pub lambda0: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rw_iter: 4,
            eps_subgradient: EpsSchedule::Constant(1.0),
            eps_cwb: EpsSchedule::Constant(0.1),
            inner_tol: 1e-8,
            inner_max_iter: 20_000,
            admm_rho: 1.0,
            recovery_tol: DEFAULT_RECOVERY_TOL,
            bisect_tol: 1e-3,
            stationary_tol: 1e-10,
            w0: None,
            lambda0: None,
        }
    }
}

impl SolverConfig {
    pub fn with_rw_iter(mut self, rw_iter: usize) -> Self {
        self.rw_iter = rw_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("inner_tol", self.inner_tol),
            ("admm_rho", self.admm_rho),
            ("recovery_tol", self.recovery_tol),
            ("bisect_tol", self.bisect_tol),
            ("stationary_tol", self.stationary_tol),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.inner_max_iter == 0 {
            return Err(Error::Config("inner_max_iter must be >= 1".into()));
        }
        self.eps_subgradient.validate("eps_subgradient")?;
        self.eps_cwb.validate("eps_cwb")?;
        if let Some(w0) = &self.w0 {
            Weights::new(w0.clone())?;
        }
        if let Some(l) = self.lambda0 {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::Config(format!("lambda0 must be >= 0, got {l}")));
            }
        }
        Ok(())
    }

    pub fn initial_weights(&self, n: usize) -> Result<Weights> {
        match &self.w0 {
            Some(w) => {
                check_len(n, w.len())?;
                Weights::new(w.clone())
            }
            None => Ok(Weights::ones(n)),
        }
    }
}

/// One per-trial improvement measurement of a noisy benchmark.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImprovementRecord {
    pub algorithm: String,
    pub seed: u64,
    pub improvement_pct: f64,
}

/// Aggregated outcome of a recovery sweep or a noisy improvement run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub sparsity_levels: Vec<usize>,
    /// Algorithm label → recovered-trial count per sparsity level.
    pub recovered: BTreeMap<String, Vec<usize>>,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub improvements: Option<Vec<ImprovementRecord>>,
}

impl SweepResult {
    /// Recovery rates in `[0, 1]`, aligned with `sparsity_levels`.
    pub fn rates(&self, algorithm: &str) -> Option<Vec<f64>> {
        let counts = self.recovered.get(algorithm)?;
        Some(counts.iter().map(|&c| rate(c, self.trials)).collect())
    }

    pub fn recovery_rate_per_algorithm(&self) -> BTreeMap<String, Vec<f64>> {
        self.recovered.keys().map(|k| (k.clone(), self.rates(k).unwrap_or_default())).collect()
    }

    /// Mean and population standard deviation of the improvements of one
    /// algorithm.
    pub fn improvement_stats(&self, algorithm: &str) -> Option<(f64, f64)> {
        let vals: Vec<f64> = self
            .improvements
            .as_ref()?
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .map(|r| r.improvement_pct)
            .collect();
        if vals.is_empty() {
            return None;
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some((mean, libm::sqrt(var)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.len() != self.trials {
            return Err(Error::Dimension { expected: self.trials, found: self.seeds.len() });
        }
        for counts in self.recovered.values() {
            check_len(self.sparsity_levels.len(), counts.len())?;
            if counts.iter().any(|&c| c > self.trials) {
                return Err(Error::Config("recovered count exceeds trials".into()));
            }
        }
        Ok(())
    }
}

fn rate(count: usize, trials: usize) -> f64 {
    if trials == 0 {
        0.0
    } else {
        count as f64 / trials as f64
    }
}

/// Number of coordinates with `|xᵢ| > tol`.
pub fn l0_norm(x: &[f64], tol: f64) -> usize {
    x.iter().filter(|v| v.abs() > tol).count()
}

/// Scale-aware threshold for counting nonzeros of an iterative solver's output.
pub fn sparsity_tol(x: &[f64]) -> f64 {
    SPARSITY_REL_TOL * linalg::norm_inf(x)
}

/// `‖x − x*‖∞ ≤ tol`
pub fn recovered(x: &[f64], x_star: &[f64], tol: f64) -> Result<bool> {
    check_len(x_star.len(), x.len())?;
    Ok(linalg::dist_inf(x, x_star) <= tol)
}

/// Percent reduction of the ℓ2 error of `x_rw` relative to the baseline
/// `x_l1`: `100·(1 − ‖x_rw − x*‖₂ / ‖x_l1 − x*‖₂)`.
pub fn improvement(x_rw: &[f64], x_l1: &[f64], x_star: &[f64]) -> Result<f64> {
    check_len(x_star.len(), x_rw.len())?;
    check_len(x_star.len(), x_l1.len())?;
    let base = linalg::dist2(x_l1, x_star);
    if base == 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    Ok(100.0 * (1.0 - linalg::dist2(x_rw, x_star) / base))
}
