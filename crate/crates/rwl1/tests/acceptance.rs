//! End-to-end acceptance criteria. Each criterion prints one line
//! `ACCEPTANCE <id> PASS|FAIL <name>: <measurement>`; run with
//! `cargo test -p rwl1 --test acceptance -- --nocapture` to see them.
//!
//! Criteria that fail for reasons inherent to the algorithms are listed in
//! `KNOWN_FAILURES`; the test asserts that exactly those fail, so a
//! regression or an unexpected pass is reported.

use std::process::Command;

use nalgebra::{DMatrix, DVector};
use rwl1::{run_noisy_improvement, run_recovery_sweep, SweepConfig};
use rwl1_core::duality::dual_function_oracle;
use rwl1_core::linalg::{self, Matrix};
use rwl1_core::model::{l0_norm, EpsSchedule, SPARSITY_REL_TOL};
use rwl1_core::probgen::{self, eta_from_sigma, gen_noiseless, noise_vector, EnsembleSpec};
use rwl1_core::reweight::{rw_l1_oracle, rw_l1_subgradient};
use rwl1_core::{ProblemInstance, SolverConfig, SolverContext, Weights};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use tempfile::tempdir;

const KNOWN_FAILURES: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id} {verdict} {name}: {}", o.detail);
}

fn uniform_weights(n: usize, mut uniform: impl FnMut() -> f64) -> Weights {
    Weights::new((0..n).map(|_| 2.0 * uniform()).collect()).unwrap()
}

fn strong_duality() -> Outcome {
    let cfg = SolverConfig::default();
    let sizes = [(256, 100, 20), (128, 64, 10), (64, 32, 8), (40, 20, 5), (12, 6, 2)];
    let mut worst: f64 = 0.0;
    for i in 0..20u64 {
        let (n, m, s) = sizes[i as usize % sizes.len()];
        let inst = gen_noiseless(&EnsembleSpec::noiseless(n, m, s, 1000 + i)).unwrap();
        let d = dual_function_oracle(&Weights::zeros(n), &SolverContext::new(&inst), None, &cfg).unwrap();
        worst = worst.max(d.value.abs());
    }
    Outcome { pass: worst <= 1e-12, detail: format!("max |d(0)| = {worst:.1e} over 20 instances (tol 1e-12)") }
}

fn useful_weights() -> Outcome {
    let cfg = SolverConfig::default();
    let mut ok = 0;
    let mut worst_res: f64 = 0.0;
    for seed in 0..50 {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(40, 20, 5, 2000 + seed)).unwrap();
        let x_star = inst.x_star().unwrap();
        let w_hat: Vec<f64> = x_star.iter().map(|v| if *v == 0.0 { 1.0 } else { 0.0 }).collect();
        let rep = SolverContext::new(&inst).weighted_basis_pursuit(&Weights::new(w_hat).unwrap(), None, &cfg).unwrap();
        let res = inst.residual_norm(&rep.x);
        worst_res = worst_res.max(res);
        let sparse = l0_norm(&rep.x, SPARSITY_REL_TOL * linalg::norm_inf(&rep.x)) <= l0_norm(x_star, 0.0);
        if sparse && res <= cfg.inner_tol {
            ok += 1;
        }
    }
    Outcome {
        pass: ok == 50,
        detail: format!("{ok}/50 with ||x||_0 <= ||x*||_0, max residual {worst_res:.1e} (tol 1e-8)"),
    }
}

fn eps_independence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(256, 100, 30, 3000 + seed)).unwrap();
        let ctx = SolverContext::new(&inst);
        let run = |eps: f64| {
            let cfg = SolverConfig { eps_subgradient: EpsSchedule::Constant(eps), ..SolverConfig::default() };
            rw_l1_subgradient(&ctx, &cfg).unwrap().x
        };
        worst = worst.max(linalg::dist_inf(&run(1.0), &run(7.0)));
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("max ||x(eps=1) - x(eps=7)||_inf = {worst:.1e} over 10 seeds (tol 1e-9)"),
    }
}

fn supergradient() -> Outcome {
    let cfg = SolverConfig::default();
    let mut g = probgen::seeded(4000);
    let mut worst = f64::NEG_INFINITY;
    for t in 0..200u64 {
        let n = 4 + g.index(7);
        let m = 2 + g.index(usize::min(5, n - 2));
        let s = 1 + g.index(m);
        let inst = gen_noiseless(&EnsembleSpec::noiseless(n, m, s, 4000 + t)).unwrap();
        let ctx = SolverContext::new(&inst);
        let w = uniform_weights(n, || g.uniform());
        let w2 = uniform_weights(n, || g.uniform());
        let d = dual_function_oracle(&w, &ctx, None, &cfg).unwrap();
        let d2 = dual_function_oracle(&w2, &ctx, None, &cfg).unwrap();
        let lin = d.value + linalg::dot(&d.subgradient, &linalg::sub(w2.as_slice(), w.as_slice()));
        worst = worst.max(d2.value - lin);
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("max d(w') - d(w) - g'(w'-w) = {worst:.1e} over 200 triples (tol 1e-6)"),
    }
}

/// Smallest support size whose least-squares fit reproduces `b`.
fn l0_optimum(inst: &ProblemInstance) -> usize {
    let (m, n) = (inst.m(), inst.n());
    let a = DMatrix::from_row_slice(m, n, inst.phi().as_slice());
    let b = DVector::from_column_slice(inst.b());
    let tol = 1e-9 * (1.0 + b.norm());
    if b.norm() <= tol {
        return 0;
    }
    for k in 1..=m {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let cols = a.select_columns(&idx);
            let svd = cols.clone().svd(true, true);
            if let Ok(x) = svd.solve(&b, 1e-12) {
                if (&cols * x - &b).norm() <= tol {
                    return k;
                }
            }
            // next k-combination of 0..n
            let mut i = k;
            while i > 0 && idx[i - 1] == n - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    m
}

fn l0_equivalence() -> Outcome {
    let cfg = SolverConfig::default();
    let mut hits = 0;
    for seed in 0..100 {
        let inst = gen_noiseless(&EnsembleSpec::noiseless(12, 8, 3, 5000 + seed)).unwrap();
        let out = rw_l1_oracle(&SolverContext::new(&inst), &cfg).unwrap();
        let found = l0_norm(&out.x, SPARSITY_REL_TOL * linalg::norm_inf(&out.x));
        if found == l0_optimum(&inst) {
            hits += 1;
        }
    }
    Outcome {
        pass: hits >= 95,
        detail: format!("{hits}/100 seeds (n=12, m=8, s=3) match the brute-force l0 optimum (need >= 95)"),
    }
}

fn recovery_curves() -> Outcome {
    let cfg = SweepConfig {
        algorithms: vec!["rw-sub".into(), "rw-cwb".into()],
        s_values: vec![20, 30, 40, 50],
        trials: 50,
        rw_iters: vec![2],
        n: 256,
        m: 100,
        ..SweepConfig::default()
    };
    let res = run_recovery_sweep(&cfg).unwrap();
    let l1 = res.rates("l1").unwrap();
    let sub = res.rates("rw-sub@2").unwrap();
    let cwb = res.rates("rw-cwb@2").unwrap();
    let mut pass = true;
    for i in 0..l1.len() {
        pass &= sub[i] >= l1[i] - 0.05 && cwb[i] >= l1[i] - 0.05;
        pass &= (sub[i] - cwb[i]).abs() <= 0.10;
    }
    Outcome {
        pass,
        detail: format!(
            "s={:?} l1={l1:?} rw-sub={sub:?} rw-cwb={cwb:?} (RW >= l1 - 0.05, |sub - cwb| <= 0.10)",
            cfg.s_values
        ),
    }
}

fn noisy_ordering() -> Outcome {
    let cfg = SweepConfig {
        s_values: vec![38],
        trials: 30,
        sigma: 0.05,
        rw_iters: vec![2],
        n: 256,
        m: 128,
        ..SweepConfig::noisy_default()
    };
    let res = run_noisy_improvement(&cfg).unwrap();
    let (lasso, _) = res.improvement_stats("rw-lasso").unwrap();
    let (cwb, _) = res.improvement_stats("cwb-noisy").unwrap();
    Outcome {
        pass: lasso > cwb && cwb > 0.0,
        detail: format!("mean improvement rw-lasso {lasso:.2}%, cwb-noisy {cwb:.2}% (need rw-lasso > cwb-noisy > 0)"),
    }
}

fn chi_squared() -> Outcome {
    let (m, sigma) = (128, 1.0);
    let eta = eta_from_sigma(sigma, m);
    let mut g = probgen::seeded(8000);
    let inside = (0..10_000)
        .filter(|_| {
            let z = noise_vector(&mut g, m, sigma);
            linalg::dot(&z, &z) <= eta * eta
        })
        .count();
    let freq = inside as f64 / 10_000.0;
    let exact = ChiSquared::new(m as f64).unwrap().cdf(eta * eta);
    Outcome {
        pass: (0.95..=0.99).contains(&freq),
        detail: format!("P(||z||^2 <= eta^2) = {freq:.4} over 10000 draws, exact {exact:.4} (need [0.95, 0.99])"),
    }
}

/// Worst violation of `0 ∈ λΦᵀ(Φx − b) + W·∂|x|`, computed from scratch.
fn kkt_violation(phi: &Matrix, b: &[f64], w: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let r = linalg::sub(&phi.mul_vec(x), b);
    let grad = phi.tr_mul_vec(&r);
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let gi = lambda * grad[i];
        let v = if x[i] != 0.0 { (gi + w[i] * x[i].signum()).abs() / (1.0 + w[i]) } else { (gi.abs() - w[i]).max(0.0) };
        worst = worst.max(v);
    }
    worst
}

fn lasso_objective(phi: &Matrix, b: &[f64], w: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let r = linalg::sub(&phi.mul_vec(x), b);
    0.5 * lambda * linalg::dot(&r, &r) + linalg::weighted_l1(w, x)
}

/// Plain ISTA with step `1/(λ·σ_max²)`, σ_max from an SVD.
fn ista(phi: &Matrix, b: &[f64], w: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
    let a = DMatrix::from_row_slice(phi.rows(), phi.cols(), phi.as_slice());
    let smax = a.singular_values().max();
    let step = 1.0 / (lambda * smax * smax);
    let mut x = vec![0.0; phi.cols()];
    for _ in 0..iters {
        let r = linalg::sub(&phi.mul_vec(&x), b);
        let grad = phi.tr_mul_vec(&r);
        for i in 0..x.len() {
            let v = x[i] - step * lambda * grad[i];
            let t = step * w[i];
            x[i] = v.signum() * (v.abs() - t).max(0.0);
        }
    }
    x
}

fn fista_optimality() -> Outcome {
    let cfg = SolverConfig::default();
    let mut g = probgen::seeded(9000);
    let (mut kkt_ok, mut obj_ok, mut small) = (0, 0, 0);
    let mut worst_kkt: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for t in 0..100 {
        let n = if t < 30 { 4 + g.index(7) } else { 11 + g.index(40) };
        let m = 2 + g.index(n - 2);
        let scale = 1.0 / (m as f64).sqrt();
        let phi = Matrix::new(m, n, (0..m * n).map(|_| g.normal(scale)).collect()).unwrap();
        let b: Vec<f64> = (0..m).map(|_| g.standard()).collect();
        let w: Vec<f64> = (0..n).map(|_| 2.0 * g.uniform()).collect();
        let lambda = 10f64.powf(-1.0 + 3.0 * g.uniform());
        let inst = ProblemInstance::new(phi.clone(), b.clone(), t as u64).unwrap();
        let rep = SolverContext::new(&inst)
            .weighted_lasso_fista(&Weights::new(w.clone()).unwrap(), lambda, None, &cfg)
            .unwrap();
        let v = kkt_violation(&phi, &b, &w, lambda, &rep.x);
        worst_kkt = worst_kkt.max(v);
        if v <= cfg.inner_tol {
            kkt_ok += 1;
        }
        if n <= 10 {
            small += 1;
            let reference = lasso_objective(&phi, &b, &w, lambda, &ista(&phi, &b, &w, lambda, 1_000_000));
            let ours = lasso_objective(&phi, &b, &w, lambda, &rep.x);
            let rel = (ours - reference) / reference.abs().max(f64::MIN_POSITIVE);
            worst_rel = worst_rel.max(rel);
            if rel <= 1e-6 {
                obj_ok += 1;
            }
        }
    }
    Outcome {
        pass: kkt_ok == 100 && obj_ok == small,
        detail: format!(
            "{kkt_ok}/100 meet optimality at 1e-8 (worst {worst_kkt:.1e}); {obj_ok}/{small} small cases within 1e-6 of ISTA (worst rel excess {worst_rel:.1e})"
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "2", "4"] {
        let name = format!("sweep_{workers}.csv");
        let status = Command::new(env!("CARGO_BIN_EXE_rwl1"))
            .args([
                "sweep",
                "--algos",
                "rw-sub,rw-cwb,oracle",
                "--s-min",
                "4",
                "--s-max",
                "16",
                "--s-step",
                "4",
                "--rw-iters",
                "1,2",
                "--trials",
                "10",
                "--seed",
                "7",
                "--n",
                "64",
                "--m",
                "32",
                "--workers",
                workers,
                "--out",
                &name,
            ])
            .current_dir(dir.path())
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(dir.path().join(&name)).unwrap());
    }
    let same = outputs.windows(2).all(|p| p[0] == p[1]);
    Outcome {
        pass: same && !outputs[0].is_empty(),
        detail: format!("sweep CSV with 1, 2 and 4 workers byte-identical: {same} ({} bytes)", outputs[0].len()),
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        (1, "strong duality at w = 0", strong_duality),
        (2, "useful weights give l0 solutions", useful_weights),
        (3, "eps-independence of the subgradient update", eps_independence),
        (4, "supergradient inequality", supergradient),
        (5, "oracle re-weighting matches brute-force l0", l0_equivalence),
        (6, "noiseless recovery curves", recovery_curves),
        (7, "noisy improvement ordering", noisy_ordering),
        (8, "chi-squared budget calibration", chi_squared),
        (9, "FISTA optimality", fista_optimality),
        (10, "sweep determinism across worker counts", determinism),
    ];
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        let o = f();
        report(id, name, &o);
        if !o.pass {
            failed.push(id);
        }
    }
    assert_eq!(failed, KNOWN_FAILURES, "failing criteria differ from the documented set");
}
