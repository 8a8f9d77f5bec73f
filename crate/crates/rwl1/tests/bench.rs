use rwl1::{run_noisy_improvement, run_recovery_sweep, SweepConfig};
use rwl1_core::SolverConfig;

fn small_sweep() -> SweepConfig {
    SweepConfig {
        algorithms: vec!["rw-sub".into(), "rw-cwb".into(), "oracle".into()],
        s_values: vec![4, 8, 12],
        trials: 8,
        base_seed: 100,
        rw_iters: vec![1, 2],
        n: 48,
        m: 24,
        parallelism: 1,
        ..SweepConfig::default()
    }
}

fn small_noisy() -> SweepConfig {
    SweepConfig { s_values: vec![6], trials: 30, n: 48, m: 24, parallelism: 1, ..SweepConfig::noisy_default() }
}

#[test]
fn sweep_is_deterministic_and_worker_independent() {
    let serial = run_recovery_sweep(&small_sweep()).unwrap();
    assert_eq!(serial, run_recovery_sweep(&small_sweep()).unwrap());
    let parallel = run_recovery_sweep(&SweepConfig { parallelism: 3, ..small_sweep() }).unwrap();
    assert_eq!(serial, parallel);
    serial.validate().unwrap();
    assert_eq!(serial.seeds, (100..108).collect::<Vec<_>>());
    let labels: Vec<&str> = serial.recovered.keys().map(String::as_str).collect();
    assert_eq!(labels, ["l1", "oracle@1", "oracle@2", "rw-cwb@1", "rw-cwb@2", "rw-sub@1", "rw-sub@2"]);
}

#[test]
fn algorithms_see_paired_instances() {
    let all = run_recovery_sweep(&small_sweep()).unwrap();
    let alone = run_recovery_sweep(&SweepConfig { algorithms: vec!["rw-sub".into()], ..small_sweep() }).unwrap();
    for label in ["l1", "rw-sub@1", "rw-sub@2"] {
        assert_eq!(all.recovered[label], alone.recovered[label], "{label}");
    }
}

#[test]
fn rates_grow_with_recovery_tolerance() {
    let tight = run_recovery_sweep(&small_sweep()).unwrap();
    let loose = run_recovery_sweep(&SweepConfig {
        solver: SolverConfig { recovery_tol: 1e-2, ..SolverConfig::default() },
        ..small_sweep()
    })
    .unwrap();
    for (label, counts) in &tight.recovered {
        for (a, b) in counts.iter().zip(&loose.recovered[label]) {
            assert!(b >= a, "{label}: {counts:?} vs {:?}", loose.recovered[label]);
        }
    }
}

#[test]
fn single_trial_rates_are_binary() {
    let res = run_recovery_sweep(&SweepConfig { trials: 1, s_values: vec![5], ..small_sweep() }).unwrap();
    for rates in res.recovery_rate_per_algorithm().values() {
        assert!(rates[0] == 0.0 || rates[0] == 1.0);
    }
}

#[test]
fn noisy_run_has_one_record_per_trial_and_algorithm() {
    let res = run_noisy_improvement(&small_noisy()).unwrap();
    assert_eq!(res, run_noisy_improvement(&SweepConfig { parallelism: 2, ..small_noisy() }).unwrap());
    let records = res.improvements.as_ref().unwrap();
    let kept = records.len() / 2;
    assert_eq!(records.len(), 2 * kept);
    assert!(kept <= 30);
    for name in ["rw-lasso", "cwb-noisy"] {
        assert_eq!(records.iter().filter(|r| r.algorithm == name).count(), kept);
        let (mean, sd) = res.improvement_stats(name).unwrap();
        assert!(mean.is_finite() && sd >= 0.0);
    }
}

#[test]
fn noisy_cwb_recovers_in_the_noiseless_limit() {
    let cfg = SweepConfig { sigma: 1e-7, s_values: vec![3], trials: 6, ..small_noisy() };
    let res = run_noisy_improvement(&cfg).unwrap();
    let kept = res.improvements.as_ref().unwrap().len() / 2;
    assert_eq!(res.recovered["cwb-noisy"], vec![kept]);
}
