//! Seeded Gaussian problem ensembles.
//!
//! Reproducibility contract: every instance is a pure function of its
//! [`EnsembleSpec`]. The generator is ChaCha20 (`rand_chacha` 0.3) seeded
//! through `SeedableRng::seed_from_u64`, uniforms take the top 53 bits of a
//! `u64` draw, normals come from the Box–Muller transform (both outputs of a
//! pair are used, cosine branch first) evaluated with `libm`, and the
//! support is the prefix of a partial Fisher–Yates shuffle with unbiased
//! rejection sampling of indices.
//!
//! Draw order: Φ row-major, then the support, then the nonzero values of x*
//! in support order, then the noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::ProblemInstance;

/// Default per-coordinate noise level of the noisy benchmark.
pub const DEFAULT_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnsembleSpec {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub sigma: Option<f64>,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn noiseless(n: usize, m: usize, s: usize, seed: u64) -> Self {
        Self { n, m, s, sigma: None, seed }
    }

    pub fn noisy(n: usize, m: usize, s: usize, sigma: f64, seed: u64) -> Self {
        Self { n, m, s, sigma: Some(sigma), seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.s && self.s <= self.m && self.m < self.n) {
            return Err(Error::Spec(format!("need 0 < s <= m < n, got n={}, m={}, s={}", self.n, self.m, self.s)));
        }
        if let Some(sigma) = self.sigma {
            if !sigma.is_finite() || sigma < 0.0 {
                return Err(Error::Spec(format!("sigma must be finite and >= 0, got {sigma}")));
            }
        }
        Ok(())
    }
}

/// Standard normal sampler over any `RngCore`.
#[derive(Debug)]
pub struct Gaussian<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> Gaussian<R> {
    pub fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` (`bound > 0`), without modulo bias.
    pub fn index(&mut self, bound: usize) -> usize {
        let bound = bound as u64;
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let r = self.rng.next_u64();
            if r < zone {
                return (r % bound) as usize;
            }
        }
    }

    pub fn standard(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // u1 in (0, 1] keeps the logarithm finite
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * PI * u2;
        self.spare = Some(radius * libm::sin(theta));
        radius * libm::cos(theta)
    }

    pub fn normal(&mut self, std_dev: f64) -> f64 {
        std_dev * self.standard()
    }
}

pub fn seeded(seed: u64) -> Gaussian<ChaCha20Rng> {
    Gaussian::new(ChaCha20Rng::seed_from_u64(seed))
}

/// Noise budget `η = σ·√(m + 2√(2m))`, so that `‖z‖₂² ≤ η²` holds with high
/// probability for `z ~ N(0, σ²I_m)`.
pub fn eta_from_sigma(sigma: f64, m: usize) -> f64 {
    let m = m as f64;
    sigma * libm::sqrt(m + 2.0 * libm::sqrt(2.0 * m))
}

/// Uniformly random `s`-subset of `0..n`, in draw order.
pub fn random_support<R: RngCore>(g: &mut Gaussian<R>, n: usize, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = i + g.index(n - i);
        idx.swap(i, j);
    }
    idx.truncate(s);
    idx
}

struct Drawn<R> {
    phi: Matrix,
    x_star: Vec<f64>,
    b: Vec<f64>,
    gauss: Gaussian<R>,
}

fn draw_signal(spec: &EnsembleSpec) -> Result<Drawn<ChaCha20Rng>> {
    spec.validate()?;
    let (n, m, s) = (spec.n, spec.m, spec.s);
    let mut g = seeded(spec.seed);
    let col_std = 1.0 / libm::sqrt(m as f64);
    let data: Vec<f64> = (0..m * n).map(|_| g.normal(col_std)).collect();
    let phi = Matrix::new(m, n, data)?;
    let support = random_support(&mut g, n, s);
    let val_std = 1.0 / libm::sqrt(s as f64);
    let mut x_star = vec![0.0; n];
    for &i in &support {
        x_star[i] = g.normal(val_std);
    }
    let b = phi.mul_vec(&x_star);
    Ok(Drawn { phi, x_star, b, gauss: g })
}

/// `Φᵢⱼ ~ N(0, 1/m)`, x* with `s` random nonzeros `~ N(0, 1/s)`, `b = Φx*`.
pub fn gen_noiseless(spec: &EnsembleSpec) -> Result<ProblemInstance> {
    if spec.sigma.is_some() {
        return Err(Error::Spec("noiseless ensemble takes no sigma".into()));
    }
    let d = draw_signal(spec)?;
    ProblemInstance::new(d.phi, d.b, spec.seed)?.with_ground_truth(d.x_star)
}

/// As [`gen_noiseless`], plus `b = Φx* + z` with `zᵢ ~ N(0, σ²)` and the
/// budget from [`eta_from_sigma`].
pub fn gen_noisy(spec: &EnsembleSpec) -> Result<ProblemInstance> {
    let sigma = spec.sigma.ok_or_else(|| Error::Spec("noisy ensemble needs sigma".into()))?;
    let mut d = draw_signal(spec)?;
    for bi in d.b.iter_mut() {
        *bi += d.gauss.normal(sigma);
    }
    ProblemInstance::new(d.phi, d.b, spec.seed)?
        .with_noise(Some(sigma), eta_from_sigma(sigma, spec.m))?
        .with_ground_truth(d.x_star)
}

/// `m` independent `N(0, σ²)` draws, the noise vector of [`gen_noisy`].
pub fn noise_vector<R: RngCore>(g: &mut Gaussian<R>, m: usize, sigma: f64) -> Vec<f64> {
    (0..m).map(|_| g.normal(sigma)).collect()
}
