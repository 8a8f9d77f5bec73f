use proptest::prelude::*;
use rwl1_core::duality::{self, dual_function_oracle, polyak_step_nonoracle, project_nonneg, subgradient_nonoracle};
use rwl1_core::linalg;
use rwl1_core::model::{l0_norm, SPARSITY_REL_TOL};
use rwl1_core::probgen::{self, gen_noiseless, EnsembleSpec};
use rwl1_core::{SolverConfig, SolverContext, Weights};

fn random_weights(n: usize, seed: u64) -> Weights {
    let mut g = probgen::seeded(seed);
    Weights::new((0..n).map(|_| 2.0 * g.uniform()).collect()).unwrap()
}

#[test]
fn zero_weights_give_zero_dual_value() {
    let cfg = SolverConfig::default();
    for seed in 0..8 {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(64, 24, 5, seed)).unwrap();
        let ctx = SolverContext::new(&inst);
        let d = dual_function_oracle(&Weights::zeros(64), &ctx, None, &cfg).unwrap();
        assert!(d.value.abs() <= 1e-12, "seed {seed}: {}", d.value);
    }
}

#[test]
fn dual_value_never_exceeds_primal_optimum() {
    let cfg = SolverConfig::default();
    for seed in 0..20 {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(30, 12, 4, seed)).unwrap();
        let ctx = SolverContext::new(&inst);
        let w = random_weights(30, 100 + seed);
        let d = dual_function_oracle(&w, &ctx, None, &cfg).unwrap();
        let scale = 1.0 + linalg::weighted_l1(w.as_slice(), inst.x_star().unwrap());
        assert!(d.value <= 1e-7 * scale, "seed {seed}: {}", d.value);
    }
}

#[test]
fn useful_weights_give_support_inside_ground_truth() {
    let cfg = SolverConfig::default();
    for seed in 0..20 {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(40, 20, 5, seed)).unwrap();
        let x_star = inst.x_star().unwrap();
        let w_hat: Vec<f64> = x_star.iter().map(|v| if *v == 0.0 { 1.0 } else { 0.0 }).collect();
        let ctx = SolverContext::new(&inst);
        let d = dual_function_oracle(&Weights::new(w_hat).unwrap(), &ctx, None, &cfg).unwrap();
        // x* itself has weighted norm 0, so the minimum is 0 and every
        // minimizer vanishes off supp(x*)
        assert!(d.value.abs() <= 1e-9, "seed {seed}: {}", d.value);
        let x = &d.minimizer;
        let tol = SPARSITY_REL_TOL * linalg::norm_inf(x);
        assert!(l0_norm(x, tol) <= l0_norm(x_star, 0.0), "seed {seed}");
        assert!(inst.residual_norm(x) <= cfg.inner_tol, "seed {seed}");
    }
}

#[test]
fn supergradient_inequality_on_small_instances() {
    let cfg = SolverConfig::default();
    for seed in 0..30 {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(8, 5, 2, seed)).unwrap();
        let ctx = SolverContext::new(&inst);
        let w = random_weights(8, 1000 + seed);
        let w2 = random_weights(8, 2000 + seed);
        let d = dual_function_oracle(&w, &ctx, None, &cfg).unwrap();
        let d2 = dual_function_oracle(&w2, &ctx, None, &cfg).unwrap();
        let step = linalg::sub(w2.as_slice(), w.as_slice());
        let bound = d.value + linalg::dot(&d.subgradient, &step);
        assert!(d2.value <= bound + 1e-6, "seed {seed}: {} > {bound}", d2.value);
    }
}

proptest! {
    #[test]
    fn nonoracle_update_is_independent_of_eps(
        w in prop::collection::vec(0.0f64..5.0, 1..12),
        x in prop::collection::vec(-3.0f64..3.0, 12),
        e1 in 0.01f64..50.0,
        e2 in 0.01f64..50.0,
    ) {
        let n = w.len();
        let x = &x[..n];
        prop_assume!(linalg::dot(x, x) > 1e-6);
        let w = Weights::new(w).unwrap();
        let update = |eps: f64| {
            let alpha = polyak_step_nonoracle(&w, x, eps).unwrap().alpha().unwrap();
            duality::ascent_step(&w, alpha, &subgradient_nonoracle(x, eps))
        };
        let (a, b) = (update(e1), update(e2));
        // closed form: w − (‖Wx‖₁/‖x‖²)·|x|
        let ratio = linalg::weighted_l1(w.as_slice(), x) / linalg::dot(x, x);
        let direct: Vec<f64> = w.as_slice().iter().zip(x).map(|(wi, xi)| wi - ratio * xi.abs()).collect();
        let direct = project_nonneg(&direct);
        let (wa, aa, ba) = (w.as_slice(), a.as_slice(), b.as_slice());
        for (i, xi) in x.iter().enumerate() {
            let scale = 1e-15 * (1.0 + wa[i] + ratio * xi.abs());
            prop_assert!((aa[i] - ba[i]).abs() <= 4.0 * scale);
            prop_assert!((aa[i] - direct.as_slice()[i]).abs() <= 1e3 * scale);
        }
    }

    #[test]
    fn projection_is_idempotent(w in prop::collection::vec(-5.0f64..5.0, 0..16)) {
        let once = project_nonneg(&w);
        let twice = project_nonneg(once.as_slice());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn nonoracle_step_is_nonnegative(
        w in prop::collection::vec(0.0f64..5.0, 6),
        x in prop::collection::vec(-3.0f64..3.0, 6),
        eps in 0.01f64..10.0,
    ) {
        let w = Weights::new(w).unwrap();
        if let Some(alpha) = polyak_step_nonoracle(&w, &x, eps).unwrap().alpha() {
            prop_assert!(alpha >= 0.0);
        }
    }
}
