use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use outer_approx::bench::{
    aggregate, figure_methods, headline_methods, method_slug, reference_solution, write_results,
    DEFAULT_LEVELS,
};
use outer_approx::solvers::{DykstraOptions, RelaxationSchedule, StepSchedule, Weighting};
use outer_approx::verify::run_operator_suites;
use outer_approx::{
    generate_problem, run_experiment, solve, Error, ExperimentConfig, MethodConfig,
    OperatorFamily, Scheme, ViProblem,
};

/// Outer approximation solvers for strongly monotone variational
/// inequalities over polyhedra.
#[derive(Parser, Debug)]
#[command(name = "outer-approx", version)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one method on one problem and write its trace CSV.
    Solve(SolveArgs),
    /// Run the multi-seed experiment and write aggregate outputs.
    Bench(BenchArgs),
    /// Check the operator inequalities on random samples.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Cyclic,
    Maxprox,
    Simultaneous,
    Composition,
}

impl From<Method> for OperatorFamily {
    fn from(m: Method) -> Self {
        match m {
            Method::Cyclic => OperatorFamily::Cyclic,
            Method::Maxprox => OperatorFamily::MaxProximity,
            Method::Simultaneous => OperatorFamily::Simultaneous,
            Method::Composition => OperatorFamily::Composition,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    /// Outer approximation step (one half-space projection per step).
    Outer,
    /// Hybrid steepest descent on the relaxed operator.
    Hsd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WeightsArg {
    Uniform,
    Residual,
    Displacement,
}

#[derive(Args, Debug)]
struct MethodArgs {
    /// Operator family building T_k.
    #[arg(long, value_enum, default_value = "cyclic")]
    method: Method,

    /// Block size b; defaults to 1 for cyclic, 20 for maxprox and m otherwise.
    #[arg(long)]
    block: Option<usize>,

    /// Augmented block control (b+). `--method maxprox --block 1 --augmented`
    /// is the cyclic+ variant.
    #[arg(long)]
    augmented: bool,

    /// Relaxation α in (0, 2), or a comma-separated list cycled over k.
    #[arg(long, default_value = "1")]
    alpha: String,

    /// Step sizes: harmonic (1/(k+1)), const:<v> or power:<scale>:<exponent>.
    #[arg(long, default_value = "harmonic")]
    lambda: String,

    /// Weights of the simultaneous operator.
    #[arg(long, value_enum, default_value = "uniform")]
    weights: WeightsArg,

    #[arg(long, value_enum, default_value = "outer")]
    scheme: SchemeArg,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Seed of the generated problem.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Dimension of generated problems.
    #[arg(long, default_value_t = 20, conflicts_with = "problem")]
    n: usize,

    /// Number of constraints of generated problems.
    #[arg(long, default_value_t = 100, conflicts_with = "problem")]
    m: usize,

    /// Read the problem {n, m, A, b, a} from a JSON file instead.
    #[arg(long)]
    problem: Option<PathBuf>,

    /// Also write the problem as JSON next to the trace.
    #[arg(long)]
    save_problem: bool,

    #[command(flatten)]
    method: MethodArgs,

    #[arg(long, default_value_t = 5000)]
    iters: usize,

    /// Record every stride-th iterate.
    #[arg(long, default_value_t = 50)]
    stride: usize,

    /// Output directory.
    #[arg(long, env = "OUTER_APPROX_OUT", default_value = "results")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// cyclic, maxprox b=20, simultaneous b=m, composition b=m
    Headline,
    /// every block configuration of the published figures (m = 100)
    Figures,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,

    #[arg(long, default_value_t = 100)]
    m: usize,

    /// Number of seeded problems.
    #[arg(long, default_value_t = 100)]
    sims: usize,

    #[arg(long, default_value_t = 5000)]
    iters: usize,

    #[arg(long, default_value_t = 50)]
    stride: usize,

    /// First problem seed; seeds are seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Method grid used when --method is not given.
    #[arg(long, value_enum, default_value = "headline")]
    preset: Preset,

    /// Run a single method instead of a preset grid.
    #[arg(long, value_enum)]
    method: Option<Method>,

    #[arg(long, requires = "method")]
    block: Option<usize>,

    #[arg(long, requires = "method")]
    augmented: bool,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, env = "OUTER_APPROX_OUT", default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Random pairs per suite.
    #[arg(long, default_value_t = 1000)]
    samples: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Bad parameter values detected after parsing; reported with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(e: impl std::fmt::Display) -> anyhow::Error {
    UsageError(e.to_string()).into()
}

fn default_block(method: Method, m: usize) -> usize {
    match method {
        Method::Cyclic => 1,
        Method::Maxprox => 20.min(m),
        Method::Simultaneous | Method::Composition => m,
    }
}

fn parse_alpha(spec: &str) -> Result<RelaxationSchedule> {
    let values = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| usage(format!("--alpha: cannot parse '{spec}'")))?;
    if values.iter().any(|a| !(*a > 0.0 && *a < 2.0)) {
        return Err(usage(format!("--alpha values must lie in (0, 2), got '{spec}'")));
    }
    let epsilon = values.iter().map(|a| a.min(2.0 - a)).fold(f64::INFINITY, f64::min);
    RelaxationSchedule::cyclic(values, epsilon).map_err(usage)
}

fn method_config(args: &MethodArgs, m: usize) -> Result<MethodConfig> {
    let block = args.block.unwrap_or_else(|| default_block(args.method, m));
    let mut config = MethodConfig::new(args.method.into(), block).augmented(args.augmented);
    config.scheme = match args.scheme {
        SchemeArg::Outer => Scheme::OuterApproximation,
        SchemeArg::Hsd => Scheme::HybridSteepestDescent,
    };
    config.weighting = match args.weights {
        WeightsArg::Uniform => Weighting::Uniform,
        WeightsArg::Residual => Weighting::Residual,
        WeightsArg::Displacement => Weighting::Displacement,
    };
    config.step = StepSchedule::parse(&args.lambda).map_err(usage)?;
    config.relaxation = parse_alpha(&args.alpha)?;
    config.validate(m).map_err(usage)?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run_solve(args: SolveArgs) -> Result<()> {
    if args.stride == 0 {
        return Err(usage("--stride must be at least 1"));
    }
    let (problem, seed) = match &args.problem {
        Some(path) => (ViProblem::load(path)?, None),
        None => {
            if args.n == 0 || args.m == 0 {
                return Err(usage("--n and --m must be at least 1"));
            }
            (generate_problem(args.seed, args.n, args.m)?, Some(args.seed))
        }
    };
    let config = method_config(&args.method, problem.constraints().len())?;
    info!(
        "solving n={} m={} with {} for {} steps",
        problem.dim(),
        problem.constraints().len(),
        config.label(),
        args.iters
    );
    let mut trace = solve(&problem, &config, args.iters, args.stride)?;
    trace.seed = seed;
    let solution = match problem.anchor() {
        Some(_) => Some(reference_solution(&problem, DykstraOptions::default())?),
        None => None,
    };
    if let Some(x_star) = &solution {
        trace.fill_errors(x_star);
    }

    let stem = match seed {
        Some(s) => format!("{}_seed{s}", method_slug(&trace.method)),
        None => method_slug(&trace.method),
    };
    let path = args.out.join(format!("{stem}.csv"));
    write_file(&path, &trace.to_csv())?;
    if args.save_problem {
        let problem_path = args.out.join(format!("{stem}_problem.json"));
        write_file(&problem_path, &problem.to_json()?)?;
    }

    let last = trace.last();
    print!(
        "{}: k={} max_residual={:.3e} op_residual={:.3e}",
        trace.method, last.k, last.max_residual, last.operator_residual
    );
    match trace.final_error() {
        Some(e) => println!(" err_log10={e:.4}"),
        None => println!(),
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    if args.n == 0 || args.m == 0 {
        return Err(usage("--n and --m must be at least 1"));
    }
    if args.stride == 0 {
        return Err(usage("--stride must be at least 1"));
    }
    if args.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let methods = match args.method {
        Some(method) => {
            let block = args.block.unwrap_or_else(|| default_block(method, args.m));
            vec![MethodConfig::new(method.into(), block).augmented(args.augmented)]
        }
        None => match args.preset {
            Preset::Headline => headline_methods(args.m),
            Preset::Figures if args.m < 100 => {
                return Err(usage("--preset figures uses blocks up to 100 and needs --m >= 100"));
            }
            Preset::Figures => figure_methods(),
        },
    };
    let config = ExperimentConfig {
        n: args.n,
        m: args.m,
        simulations: args.sims,
        iterations: args.iters,
        stride: args.stride,
        methods,
        master_seed: args.seed,
        threads: args.threads,
        ..ExperimentConfig::default()
    };
    config.validate().map_err(usage)?;
    info!(
        "{} methods x {} seeds, {} steps each",
        config.methods.len(),
        config.simulations,
        config.iterations
    );
    let result = run_experiment(&config)?;
    let table = aggregate(&result.traces, &DEFAULT_LEVELS)?;
    let written = write_results(&args.out, &table, &result, &config)?;

    for method in table.methods() {
        if let Some(median) = table.final_median(&method) {
            println!("{method}: median final err_log10 {median:.4}");
        }
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<bool> {
    if args.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let reports = run_operator_suites(args.seed, args.samples)?;
    let mut ok = true;
    for r in &reports {
        println!("{r}");
        ok &= r.passed();
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} suites, {failed} failed", reports.len());
    Ok(ok)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidConfig(_) | Error::InvalidRelaxation(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = match cli.command {
        Command::Solve(args) => run_solve(args).map(|_| true),
        Command::Bench(args) => run_bench(args).map(|_| true),
        Command::Verify(args) => run_verify(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
