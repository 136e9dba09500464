//! Acceptance criteria. Each test prints one `criterion N [PASS|FAIL]` line
//! straight to stdout, so the lines show up even when output is captured.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use outer_approx::bench::{
    aggregate, headline_methods, reference_solution, write_results, ExperimentResult, RibbonTable,
    DEFAULT_LEVELS,
};
use outer_approx::operators::project_halfspace;
use outer_approx::solvers::{distance_to_polyhedron, dykstra_project, DykstraOptions};
use outer_approx::verify::run_operator_suites;
use outer_approx::{
    generate_problem, run_experiment, ExperimentConfig, MethodConfig, OperatorFamily, Solver,
    ViProblem,
};

const SWEEP_SEEDS: usize = 20;
const SWEEP_ITERS: usize = 5000;

fn report(criterion: u32, passed: bool, summary: &str, elapsed: Duration) {
    let line = format!(
        "criterion {criterion} [{}] {summary} ({:.2}s)\n",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}

fn method(family: OperatorFamily, b: usize, augmented: bool) -> MethodConfig {
    MethodConfig::new(family, b).augmented(augmented)
}

fn sweep_methods() -> Vec<MethodConfig> {
    use OperatorFamily::*;
    vec![
        MethodConfig::cyclic(),
        method(MaxProximity, 2, false),
        method(MaxProximity, 5, false),
        method(MaxProximity, 20, false),
        method(Simultaneous, 100, false),
        method(Simultaneous, 20, false),
        method(Simultaneous, 20, true),
        method(Composition, 100, false),
        method(Composition, 20, false),
        method(Composition, 20, true),
    ]
}

struct Sweep {
    result: ExperimentResult,
    table: RibbonTable,
    elapsed: Duration,
}

impl Sweep {
    fn final_median(&self, label: &str) -> f64 {
        self.table.final_median(label).expect("method in sweep")
    }

    fn final_errors(&self, label: &str) -> BTreeMap<u64, f64> {
        self.result
            .traces_for(label)
            .map(|t| (t.seed.unwrap(), t.final_error().unwrap()))
            .collect()
    }
}

fn sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let config = ExperimentConfig {
            simulations: SWEEP_SEEDS,
            methods: sweep_methods(),
            ..ExperimentConfig::default()
        };
        let result = run_experiment(&config).expect("sweep runs");
        let table = aggregate(&result.traces, &DEFAULT_LEVELS).unwrap();
        Sweep {
            result,
            table,
            elapsed: start.elapsed(),
        }
    })
}

#[test]
fn criterion_1_operator_property_suites() {
    let start = Instant::now();
    let reports = run_operator_suites(2024, 1000).unwrap();
    let elapsed = start.elapsed();
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.to_string()).collect();
    let passed = failed.is_empty() && reports.iter().all(|r| r.samples == 1000) && elapsed.as_secs() < 10;
    report(
        1,
        passed,
        &format!(
            "operator property suites: {}/{} suites within tolerance over 1000 samples each",
            reports.len() - failed.len(),
            reports.len()
        ),
        elapsed,
    );
    assert!(passed, "failing suites: {failed:#?}");
}

#[test]
fn criterion_2_polyhedral_cyclic_equivalence() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_other: f64 = 0.0;
    let mut mismatched = 0;
    let mut mismatched_unexplained = 0;
    let mut seeds_failing = 0;
    for seed in 0..10 {
        let p = generate_problem(seed, 20, 100).unwrap();
        let mut solver = Solver::new(&p, MethodConfig::cyclic()).unwrap();
        let mut seed_failed = false;
        for k in 0..1000 {
            let x = solver.state().x.clone();
            let h = p.constraints().constraint(k % 100 + 1).unwrap().clone();
            let lambda = 1.0 / (k as f64 + 1.0);
            let z = x.sub(&p.field().eval(&x).unwrap().scale(lambda).unwrap()).unwrap();
            let direct = project_halfspace(&h, &z).unwrap();
            let step = solver.step().unwrap().unwrap();
            let gap = step.next.distance(&direct).unwrap();
            worst = worst.max(gap);
            let explained = h.contains(&x, 0.0).unwrap() && !h.contains(&z, 0.0).unwrap();
            if !explained {
                worst_other = worst_other.max(gap);
            }
            if gap > 1e-12 {
                mismatched += 1;
                seed_failed = true;
                if !explained {
                    mismatched_unexplained += 1;
                }
            }
        }
        seeds_failing += usize::from(seed_failed);
    }
    let elapsed = start.elapsed();
    let passed = mismatched == 0 && elapsed.as_secs() < 5;
    report(
        2,
        passed,
        &format!(
            "polyhedral-cyclic equivalence: {mismatched}/10000 steps differ by more than 1e-12 \
             on {seeds_failing}/10 seeds (worst {worst:.3e}); {} of them have x^k in C_[k] and \
             z^k outside, where H_k is the whole space and the step returns z^k; all other \
             steps agree within {worst_other:.1e}",
            mismatched - mismatched_unexplained
        ),
        elapsed,
    );
    assert_eq!(mismatched_unexplained, 0, "mismatch outside the x^k in C_[k] case");
    assert!(passed, "worst per-step deviation {worst:e}");
}

/// Minimizes `‖z − a‖` over `{Az ≤ b}` by solving the equality-constrained
/// problem for every active set of at most `n` rows and keeping the closest
/// feasible candidate.
fn kkt_enumeration(p: &ViProblem) -> DVector<f64> {
    let a = DVector::from_column_slice(p.anchor().unwrap().as_slice());
    let rows: Vec<(DVector<f64>, f64)> = p
        .constraints()
        .constraints()
        .iter()
        .map(|h| (DVector::from_column_slice(h.normal().as_slice()), h.offset()))
        .collect();
    let (n, m) = (p.dim(), rows.len());
    let feasible =
        |z: &DVector<f64>| rows.iter().all(|(r, b)| r.dot(z) - b <= 1e-9 * (1.0 + b.abs()));

    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if active.len() > n {
            continue;
        }
        let z = if active.is_empty() {
            a.clone()
        } else {
            let s = DMatrix::from_fn(active.len(), n, |i, j| rows[active[i]].0[j]);
            let rhs = DVector::from_fn(active.len(), |i, _| rows[active[i]].0.dot(&a) - rows[active[i]].1);
            let gram = &s * s.transpose();
            let Some(mu) = gram.lu().solve(&rhs) else { continue };
            &a - s.transpose() * mu
        };
        if !feasible(&z) {
            continue;
        }
        let d = (&z - &a).norm();
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, z));
        }
    }
    best.expect("C is nonempty").1
}

#[test]
fn criterion_3_oracle_cross_validation() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let p = generate_problem(seed, 5, 8).unwrap();
        let dykstra = reference_solution(&p, DykstraOptions::default()).unwrap();
        let kkt = kkt_enumeration(&p);
        let gap = (DVector::from_column_slice(dykstra.as_slice()) - kkt).norm();
        worst = worst.max(gap);
    }
    let elapsed = start.elapsed();
    let passed = worst <= 1e-6 && elapsed.as_secs() < 30;
    report(
        3,
        passed,
        &format!("Dykstra vs active-set KKT enumeration on 20 problems (n=5, m=8): worst gap {worst:.3e} <= 1e-6"),
        elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_4_convergence_at_desk_scale() {
    let s = sweep();
    let checkpoints = [0, 1000, 2000, 3000, 4000, 5000];
    let mut notes = Vec::new();
    let mut passed = s.elapsed.as_secs() < 300;
    for m in headline_methods(100) {
        let label = m.label();
        let medians: Vec<f64> = checkpoints
            .iter()
            .map(|&k| s.table.rows_for(&label).find(|r| r.k == k).unwrap().median)
            .collect();
        let final_ok = medians[5] <= -1.0;
        let monotone = medians.windows(2).all(|w| w[1] <= w[0] + 0.05);
        passed &= final_ok && monotone;
        notes.push(format!("{label} {:.3}{}", medians[5], if monotone { "" } else { " (not monotone)" }));
    }
    report(
        4,
        passed,
        &format!(
            "median err_log10 at k={SWEEP_ITERS} <= -1 and non-increasing over 20 seeds: {}",
            notes.join(", ")
        ),
        s.elapsed,
    );
    assert!(passed);
}

#[test]
fn criterion_5_composition_outperforms() {
    let s = sweep();
    let comp = s.final_median("composition b=100");
    let others = ["cyclic", "maxprox b=20", "simultaneous b=100"].map(|l| (l, s.final_median(l)));
    let passed = others.iter().all(|(_, v)| comp < *v);
    let listed: Vec<String> = others.iter().map(|(l, v)| format!("{l} {v:.3}")).collect();
    report(
        5,
        passed,
        &format!("composition b=100 median {comp:.3} below {}", listed.join(", ")),
        Duration::ZERO,
    );
    assert!(passed);
}

#[test]
fn criterion_6_larger_blocks_converge_faster() {
    let s = sweep();
    let medians = [2, 5, 20].map(|b| s.final_median(&format!("maxprox b={b}")));
    let passed = medians.windows(2).all(|w| w[1] <= w[0] + 0.05);
    report(
        6,
        passed,
        &format!(
            "maxprox median final err_log10 for b=2, 5, 20: {:.3}, {:.3}, {:.3} (non-increasing, slack 0.05)",
            medians[0], medians[1], medians[2]
        ),
        Duration::ZERO,
    );
    assert!(passed);
}

#[test]
fn criterion_7_augmented_blocks_accelerate() {
    let s = sweep();
    let mut passed = true;
    let mut notes = Vec::new();
    for family in ["simultaneous", "composition"] {
        let fixed = s.final_errors(&format!("{family} b=20"));
        let augmented = s.final_errors(&format!("{family} b=20+"));
        let wins = fixed.iter().filter(|(seed, f)| augmented[seed] <= **f).count();
        let share = wins as f64 / fixed.len() as f64;
        passed &= share >= 0.6;
        notes.push(format!("{family} {wins}/{}", fixed.len()));
    }
    report(
        7,
        passed,
        &format!("b=20+ final error <= b=20 on at least 60% of seeds: {}", notes.join(", ")),
        Duration::ZERO,
    );
    assert!(passed);
}

#[test]
fn criterion_8_feasibility_decay() {
    let s = sweep();
    let start = Instant::now();
    let opts = DykstraOptions::default();
    let mut worst_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    let mut failing_runs: BTreeMap<&str, usize> = BTreeMap::new();
    for trace in &s.result.traces {
        let seed = trace.seed.unwrap();
        let p = generate_problem(seed, 20, 100).unwrap();
        let d0 = distance_to_polyhedron(&trace.first().x, p.constraints(), opts).unwrap();
        let d = distance_to_polyhedron(&trace.last().x, p.constraints(), opts).unwrap();
        let ratio = d / d0;
        worst_ratio = worst_ratio.max(ratio);
        if !(d < 1e-2 * d0) {
            failures.push(format!("{} seed {seed}: {ratio:.3e}", trace.method));
            *failing_runs.entry(&trace.method).or_default() += 1;
        }
    }
    let passed = failures.is_empty();
    report(
        8,
        passed,
        &format!(
            "d(x^5000, C) < 1e-2 d(x^0, C) for {} runs; worst ratio {worst_ratio:.3e}; failing runs per method: {}",
            s.result.traces.len(),
            if failing_runs.is_empty() {
                "none".to_string()
            } else {
                failing_runs.iter().map(|(m, c)| format!("{m} {c}/{SWEEP_SEEDS}")).collect::<Vec<_>>().join(", ")
            }
        ),
        start.elapsed(),
    );
    assert!(passed, "{failures:#?}");
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn criterion_9_determinism() {
    let start = Instant::now();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).max(4);
    let mut outputs = Vec::new();
    for threads in [1, workers] {
        let config = ExperimentConfig {
            simulations: SWEEP_SEEDS,
            threads: Some(threads),
            ..ExperimentConfig::default()
        };
        let result = run_experiment(&config).unwrap();
        let table = aggregate(&result.traces, &DEFAULT_LEVELS).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_results(dir.path(), &table, &result, &config).unwrap();
        outputs.push(read_tree(dir.path()));
    }
    let csvs = outputs[0].keys().filter(|k| k.ends_with(".csv")).count();
    let passed = outputs[0] == outputs[1] && csvs == 4 * SWEEP_SEEDS + 1;
    report(
        9,
        passed,
        &format!(
            "serial and {workers}-thread sweeps wrote byte-identical outputs ({} files, {csvs} CSVs)",
            outputs[0].len()
        ),
        start.elapsed(),
    );
    assert!(passed);
}

#[test]
fn sweep_problems_are_shared_across_methods() {
    let s = sweep();
    assert_eq!(s.result.seeds.len(), SWEEP_SEEDS);
    for rec in &s.result.seeds {
        let p = generate_problem(rec.seed, 20, 100).unwrap();
        assert_eq!(p.fingerprint(), rec.fingerprint);
        let star = dykstra_project(p.anchor().unwrap(), p.constraints(), DykstraOptions::default()).unwrap();
        assert!(p.constraints().max_residual(&star).unwrap().1 <= 1e-8);
    }
    for t in &s.result.traces {
        assert_eq!(t.last().k, SWEEP_ITERS);
        assert_eq!(t.first().err_log10, Some(0.0));
    }
}
