use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rwl1::io;
use rwl1::{Error, SweepConfig};
use rwl1_core::probgen::{self, EnsembleSpec};
use rwl1_core::reweight::{self, Algorithm};
use rwl1_core::{model, SolverContext};
use serde::Serialize;

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "rwl1", version, about = "Re-weighted l1 sparse recovery experiments")]
struct Cli {
    /// TOML file with sweep and solver settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random Gaussian instance as JSON.
    Gen(GenArgs),
    /// Run one algorithm on an instance file.
    Solve(SolveArgs),
    /// Recovery rate against sparsity on noiseless instances.
    Sweep(SweepArgs),
    /// Improvement over residual-budget l1 on noisy instances.
    NoisyBench(NoisyArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    /// Noise level; omit for a noiseless instance.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    algo: Algorithm,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    rw_iter: Option<usize>,
    /// Write the outer trace here and the inner-solve trace next to it
    /// (`run.csv` and `run.inner.csv`).
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Write the result as JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Shared {
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Comma-separated algorithm names; plain l1 is always included.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    #[arg(long)]
    s_min: Option<usize>,
    #[arg(long)]
    s_max: Option<usize>,
    #[arg(long)]
    s_step: Option<usize>,
    /// Comma-separated outer budgets.
    #[arg(long, value_delimiter = ',')]
    rw_iters: Option<Vec<usize>>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Debug, Args)]
struct NoisyArgs {
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rw_iter: Option<usize>,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    algorithm: &'a str,
    seed: u64,
    exit: &'a str,
    outer_iterations: usize,
    l0: usize,
    linf_err: Option<f64>,
    recovered: Option<bool>,
    x: &'a [f64],
}

/// Failure of a subcommand with the exit code it maps to.
struct Failure {
    code: u8,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self { code: EXIT_CONFIG, error }
    }
}

impl From<rwl1_core::Error> for Failure {
    fn from(e: rwl1_core::Error) -> Self {
        Error::from(e).into()
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file_cfg = match &cli.config {
        Some(path) => Some(SweepConfig::load(path)?),
        None => None,
    };
    match cli.command {
        Command::Gen(args) => gen(args),
        Command::Solve(args) => solve(args, file_cfg),
        Command::Sweep(args) => sweep(args, file_cfg.unwrap_or_default()),
        Command::NoisyBench(args) => noisy(args, file_cfg.unwrap_or_else(SweepConfig::noisy_default)),
    }
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let spec = match args.sigma {
        Some(sigma) => EnsembleSpec::noisy(args.n, args.m, args.s, sigma, args.seed),
        None => EnsembleSpec::noiseless(args.n, args.m, args.s, args.seed),
    };
    let inst = if spec.sigma.is_some() { probgen::gen_noisy(&spec)? } else { probgen::gen_noiseless(&spec)? };
    io::write_instance(&args.out, &inst)?;
    info!("wrote {}", args.out.display());
    Ok(())
}

fn solve(args: SolveArgs, file_cfg: Option<SweepConfig>) -> Result<(), Failure> {
    let inst = io::read_instance(&args.instance)?;
    let mut cfg = file_cfg.map(|c| c.solver).unwrap_or_default();
    if let Some(k) = args.rw_iter {
        cfg.rw_iter = k;
    }
    cfg.validate()?;
    let ctx = SolverContext::new(&inst);
    let out = reweight::run(args.algo, &ctx, &cfg).map_err(|e| {
        let error = Error::from(e);
        let code = if error.is_config() { EXIT_CONFIG } else { EXIT_SOLVER };
        Failure { code, error }
    })?;
    if let Some(path) = &args.trace {
        io::write_traces(path, args.algo.name(), inst.seed(), &out.trace)?;
    }
    let last = out.trace.records.last();
    let report = SolveOutput {
        algorithm: args.algo.name(),
        seed: inst.seed(),
        exit: out.trace.exit.name(),
        outer_iterations: out.state.k,
        l0: model::l0_norm(&out.x, model::sparsity_tol(&out.x)),
        linf_err: last.and_then(|r| r.linf_err),
        recovered: inst.x_star().map(|xs| model::recovered(&out.x, xs, cfg.recovery_tol)).transpose()?,
        x: &out.x,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|source| Error::Io { path: path.clone(), source })?,
        None => {
            // a closed pipe (`rwl1 solve ... | head`) is not an error
            match writeln!(std::io::stdout().lock(), "{json}") {
                Err(source) if source.kind() != ErrorKind::BrokenPipe => {
                    return Err(Error::Io { path: PathBuf::from("<stdout>"), source }.into())
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn apply_shared(cfg: &mut SweepConfig, shared: &Shared) {
    if let Some(t) = shared.trials {
        cfg.trials = t;
    }
    if let Some(seed) = shared.seed {
        cfg.base_seed = seed;
    }
    if let Some(n) = shared.n {
        cfg.n = n;
    }
    if let Some(m) = shared.m {
        cfg.m = m;
    }
    if let Some(w) = shared.workers {
        cfg.parallelism = w;
    }
}

fn sparsity_grid(cfg: &SweepConfig, args: &SweepArgs) -> Result<Vec<usize>, Error> {
    if args.s_min.is_none() && args.s_max.is_none() && args.s_step.is_none() {
        return Ok(cfg.s_values.clone());
    }
    let lo = args.s_min.or_else(|| cfg.s_values.iter().copied().min()).unwrap_or(1);
    let hi = args.s_max.or_else(|| cfg.s_values.iter().copied().max()).unwrap_or(lo);
    let step = args.s_step.unwrap_or(5);
    if step == 0 || lo > hi {
        return Err(Error::Config(format!("empty sparsity range {lo}..={hi} step {step}")));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn sweep(args: SweepArgs, mut cfg: SweepConfig) -> Result<(), Failure> {
    apply_shared(&mut cfg, &args.shared);
    cfg.s_values = sparsity_grid(&cfg, &args)?;
    if let Some(a) = &args.algos {
        cfg.algorithms = a.clone();
    }
    if let Some(k) = &args.rw_iters {
        cfg.rw_iters = k.clone();
    }
    let result = rwl1::run_recovery_sweep(&cfg)?;
    write(&result, &args.shared.out)
}

fn noisy(args: NoisyArgs, mut cfg: SweepConfig) -> Result<(), Failure> {
    apply_shared(&mut cfg, &args.shared);
    if let Some(s) = args.s {
        cfg.s_values = vec![s];
    }
    if let Some(sigma) = args.sigma {
        cfg.sigma = sigma;
    }
    if let Some(k) = args.rw_iter {
        cfg.rw_iters = vec![k];
    }
    let result = rwl1::run_noisy_improvement(&cfg)?;
    for a in &cfg.algorithms {
        if let Some((mean, std)) = result.improvement_stats(a) {
            info!("{a}: mean improvement {mean:.2}% (std {std:.2})");
        }
    }
    write(&result, &args.shared.out)
}

fn write(result: &rwl1_core::SweepResult, path: &Path) -> Result<(), Failure> {
    rwl1::emit_csv(result, path)?;
    info!("wrote {}", path.display());
    Ok(())
}
