use statrs::distribution::{ChiSquared, ContinuousCDF};

use rwl1_core::linalg;
use rwl1_core::probgen::{eta_from_sigma, gen_noiseless, gen_noisy, noise_vector, seeded, EnsembleSpec};

#[test]
fn columns_have_unit_norm_in_expectation() {
    let draws = 1000;
    let mut total = 0.0;
    for seed in 0..draws {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(256, 100, 10, seed)).unwrap();
        let phi = inst.phi();
        let sum: f64 = phi.as_slice().iter().map(|v| v * v).sum();
        total += sum / 256.0;
    }
    let mean = total / draws as f64;
    assert!((mean - 1.0).abs() <= 0.15, "{mean}");
}

#[test]
fn ground_truth_has_unit_energy_in_expectation() {
    let draws = 1000;
    let mean = (0..draws)
        .map(|seed| {
            let inst = gen_noiseless(&EnsembleSpec::noiseless(60, 30, 8, seed)).unwrap();
            let x = inst.x_star().unwrap();
            linalg::dot(x, x)
        })
        .sum::<f64>()
        / draws as f64;
    assert!((mean - 1.0).abs() <= 0.15, "{mean}");
}

#[test]
fn noise_budget_matches_chi_squared_quantile() {
    let (m, sigma) = (128, 1.0);
    let eta = eta_from_sigma(sigma, m);
    let exact = ChiSquared::new(m as f64).unwrap().cdf(eta * eta);
    assert!((exact - 0.971).abs() <= 0.005, "{exact}");

    let mut g = seeded(2024);
    let draws = 10_000;
    let inside = (0..draws)
        .filter(|_| {
            let z = noise_vector(&mut g, m, sigma);
            linalg::dot(&z, &z) <= eta * eta
        })
        .count();
    let freq = inside as f64 / draws as f64;
    assert!((freq - 0.971).abs() <= 0.02, "{freq}");
}

#[test]
fn noisy_observation_is_within_budget_mostly() {
    let mut inside = 0;
    for seed in 0..200 {
        let inst = gen_noisy(&EnsembleSpec::noisy(64, 32, 4, 0.1, seed)).unwrap();
        let r = inst.residual_norm(inst.x_star().unwrap());
        if r <= inst.eta().unwrap() {
            inside += 1;
        }
    }
    let exact = ChiSquared::new(32.0).unwrap().cdf(32.0 + 2.0 * (64.0f64).sqrt());
    let freq = inside as f64 / 200.0;
    assert!((freq - exact).abs() <= 0.05, "{freq} vs {exact}");
}

#[test]
fn instances_are_bit_identical_per_seed() {
    let spec = EnsembleSpec::noisy(128, 50, 12, 0.05, 77);
    let a = gen_noisy(&spec).unwrap();
    let b = gen_noisy(&spec).unwrap();
    assert_eq!(a.phi().as_slice(), b.phi().as_slice());
    assert_eq!(a.b(), b.b());
    assert_eq!(a.x_star(), b.x_star());
    assert_eq!(a.eta(), b.eta());
}
