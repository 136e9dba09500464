//! The multi-seed convergence experiment.
//!
//! Every seed yields one random problem shared by all methods of the grid.
//! The reference solution comes from the Dykstra oracle, and each trace
//! stores `log10(‖x^k − x*‖/‖x^0 − x*‖)` every `stride` steps. Seeds run in
//! parallel, but each run is sequential and results are collected in a
//! fixed order, so outputs do not depend on the thread count.

mod aggregate;
mod generate;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use aggregate::{aggregate, percentile, RibbonRow, RibbonTable, DEFAULT_LEVELS};
pub use generate::{generate_problem, interior_point, SLACK_RANGE, TARGET_RADIUS};

use crate::error::{Error, Result};
use crate::problem::ViProblem;
use crate::solvers::{dykstra_project, solve, DykstraOptions, MethodConfig, OperatorFamily};
use crate::trace::RunTrace;
use crate::vector::Vector;

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub simulations: usize,
    pub iterations: usize,
    pub stride: usize,
    pub methods: Vec<MethodConfig>,
    pub master_seed: u64,
    /// Worker threads; `None` uses the available parallelism.
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub oracle: DykstraOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 20,
            m: 100,
            simulations: 100,
            iterations: 5000,
            stride: 50,
            methods: headline_methods(100),
            master_seed: 0,
            threads: None,
            oracle: DykstraOptions::default(),
        }
    }
}

impl ExperimentConfig {
    /// Problem seeds `master_seed, master_seed + 1, …`.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.simulations as u64)
            .map(|i| self.master_seed.wrapping_add(i))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("n and m must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be positive".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("thread count must be positive".into()));
        }
        let mut labels = Vec::new();
        for method in &self.methods {
            method.validate(self.m)?;
            let label = method.label();
            if labels.contains(&label) {
                return Err(Error::InvalidConfig(format!("method {label} listed twice")));
            }
            labels.push(label);
        }
        Ok(())
    }
}

/// Cyclic, maximum proximity with `b = 20`, and the full simultaneous and
/// composition operators for `m` constraints.
pub fn headline_methods(m: usize) -> Vec<MethodConfig> {
    vec![
        MethodConfig::cyclic(),
        MethodConfig::new(OperatorFamily::MaxProximity, 20.min(m)),
        MethodConfig::new(OperatorFamily::Simultaneous, m),
        MethodConfig::new(OperatorFamily::Composition, m),
    ]
}

/// Every block configuration of the published figures, for `m = 100`.
pub fn figure_methods() -> Vec<MethodConfig> {
    use OperatorFamily::*;
    let mut methods = vec![MethodConfig::cyclic()];
    let mut push = |family, block: usize, augmented| {
        let method = MethodConfig::new(family, block).augmented(augmented);
        if !methods.iter().any(|m| m.label() == method.label()) {
            methods.push(method);
        }
    };
    for b in [2, 3, 5, 10, 20] {
        push(MaxProximity, b, false);
    }
    for b in [1, 2, 3, 5, 10, 20] {
        push(MaxProximity, b, true);
    }
    for b in [10, 20, 30, 40, 50, 100] {
        push(Simultaneous, b, false);
    }
    for b in [1, 10, 20, 30, 40, 50] {
        push(Simultaneous, b, true);
    }
    for b in [3, 5, 10, 20, 30, 100] {
        push(Composition, b, false);
    }
    for b in [1, 10, 20, 30, 40, 50] {
        push(Composition, b, true);
    }
    methods
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub fingerprint: u64,
    #[serde(skip)]
    pub solution: Vector,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    /// Ordered by method (grid order), then seed.
    pub traces: Vec<RunTrace>,
    pub seeds: Vec<SeedRecord>,
}

impl ExperimentResult {
    pub fn traces_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a RunTrace> + 'a {
        self.traces.iter().filter(move |t| t.method == method)
    }
}

struct SeedRun {
    record: SeedRecord,
    traces: Vec<RunTrace>,
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let annotate = |method: &str| {
        let method = method.to_string();
        move |e: Error| Error::Run {
            seed,
            method,
            source: Box::new(e),
        }
    };
    let problem = generate_problem(seed, config.n, config.m).map_err(annotate("generator"))?;
    let solution = reference_solution(&problem, config.oracle).map_err(annotate("oracle"))?;
    let mut traces = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let label = method.label();
        let mut trace =
            solve(&problem, method, config.iterations, config.stride).map_err(annotate(&label))?;
        trace.seed = Some(seed);
        trace.fill_errors(&solution);
        traces.push(trace);
    }
    Ok(SeedRun {
        record: SeedRecord {
            seed,
            fingerprint: problem.fingerprint(),
            solution,
        },
        traces,
    })
}

/// `x*` of a best-approximation problem via the Dykstra oracle.
pub fn reference_solution(problem: &ViProblem, opts: DykstraOptions) -> Result<Vector> {
    let anchor = problem.anchor().ok_or_else(|| {
        Error::InvalidConfig("the Dykstra oracle needs an F = id − a problem".into())
    })?;
    dykstra_project(anchor, problem.constraints(), opts)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let seeds = config.seeds();
    let runs: Vec<SeedRun> = match config.threads {
        Some(1) => seeds
            .iter()
            .map(|&s| run_seed(config, s))
            .collect::<Result<_>>()?,
        threads => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                builder = builder.num_threads(t);
            }
            let pool = builder
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| {
                seeds
                    .par_iter()
                    .map(|&s| run_seed(config, s))
                    .collect::<Result<_>>()
            })?
        }
    };

    let mut traces = Vec::with_capacity(runs.len() * config.methods.len());
    for j in 0..config.methods.len() {
        traces.extend(runs.iter().map(|r| r.traces[j].clone()));
    }
    Ok(ExperimentResult {
        traces,
        seeds: runs.into_iter().map(|r| r.record).collect(),
    })
}

/// File-name friendly form of a method label.
pub fn method_slug(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            ' ' => Some('_'),
            '=' => None,
            '+' => Some('p'),
            c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => Some(c),
            _ => None,
        })
        .collect()
}

#[derive(Serialize)]
struct Metadata<'a> {
    package: &'static str,
    version: &'static str,
    config: &'a ExperimentConfig,
    start_point: &'static str,
    percentile_rule: &'static str,
    ribbon_levels: &'a [u32],
    seeds: &'a [SeedRecord],
    absolute_error_traces: Vec<String>,
    oracle_tol: f64,
    oracle_max_sweeps: usize,
}

/// Writes per-trace CSVs under `traces/`, `aggregate.csv`, a gnuplot script
/// `plot.gp` and `metadata.json` into `dir`; returns the written paths.
pub fn write_results(
    dir: &Path,
    table: &RibbonTable,
    result: &ExperimentResult,
    config: &ExperimentConfig,
) -> Result<Vec<PathBuf>> {
    let trace_dir = dir.join("traces");
    fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
    let mut written = Vec::new();
    let mut write = |path: PathBuf, contents: String| -> Result<()> {
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        Ok(())
    };

    for t in &result.traces {
        let name = format!(
            "{}_seed{}.csv",
            method_slug(&t.method),
            t.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into())
        );
        write(trace_dir.join(name), t.to_csv())?;
    }
    write(dir.join("aggregate.csv"), table.to_csv())?;
    write(dir.join("plot.gp"), gnuplot_script(table))?;

    let metadata = Metadata {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        start_point: "origin",
        percentile_rule: "linear interpolation between order statistics at h = (N-1)p/100",
        ribbon_levels: &table.levels,
        seeds: &result.seeds,
        absolute_error_traces: result
            .traces
            .iter()
            .filter(|t| t.absolute_error)
            .map(|t| format!("{} seed {}", t.method, t.seed.unwrap_or_default()))
            .collect(),
        oracle_tol: config.oracle.tol,
        oracle_max_sweeps: config.oracle.max_sweeps,
    };
    let json = serde_json::to_string_pretty(&metadata)?;
    write(dir.join("metadata.json"), json + "\n")?;
    Ok(written)
}

/// Gnuplot script drawing median lines over shaded ribbons from
/// `aggregate.csv`.
pub fn gnuplot_script(table: &RibbonTable) -> String {
    let percentiles = table.percentiles();
    let column = |p: f64| 4 + percentiles.iter().position(|&q| q == p).expect("known percentile");
    let mut levels = table.levels.clone();
    levels.sort_unstable_by(|a, b| b.cmp(a));

    let mut out = String::from(
        "# median log error with central ribbons; run: gnuplot plot.gp\n\
         set datafile separator ','\n\
         set terminal pngcairo size 1200,800\n\
         set output 'convergence.png'\n\
         set key outside right\n\
         set xlabel 'k'\n\
         set ylabel 'log10(|x^k - x*| / |x^0 - x*|)'\n\
         sel(m, c) = (strcol(1) eq m) ? column(c) : NaN\n\
         plot \\\n",
    );
    let mut items = Vec::new();
    for (i, method) in table.methods().iter().enumerate() {
        let color = i + 1;
        for (j, level) in levels.iter().enumerate() {
            let half = *level as f64 / 2.0;
            let (lo, hi) = (column(50.0 - half), column(50.0 + half));
            let opacity = 0.08 + 0.06 * j as f64;
            items.push(format!(
                "  'aggregate.csv' every ::1 using 2:(sel(\"{method}\", {lo})):(sel(\"{method}\", {hi})) \
                 with filledcurves fs transparent solid {opacity:.2} noborder lc {color} notitle"
            ));
        }
        items.push(format!(
            "  'aggregate.csv' every ::1 using 2:(sel(\"{method}\", 3)) with lines lw 3 lc {color} title '{method}'"
        ));
    }
    if items.is_empty() {
        items.push("  NaN notitle".into());
    }
    out.push_str(&items.join(", \\\n"));
    out.push('\n');
    out
}
