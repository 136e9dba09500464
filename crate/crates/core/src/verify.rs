//! Randomized checks of the operator-class inequalities.
//!
//! Each suite draws fresh random operators in ℝ⁵, points `x` uniform in
//! `[-10, 10]⁵` and fixed points `z` of the operator under test, and records
//! the worst value of the relevant witness. Fixed points are sampled on
//! segments from a strictly feasible anchor towards random points, clipped
//! at the boundary, so both interior and boundary points occur.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::operators::{
    adaptive_operator, composition_half, cutter_witness, fne_witness, max_proximity, relax,
    simultaneous, sqne_witness, AdaptiveMode, AffineFunction, ConvexFunction, DiagonalQuadratic,
    MaxAffine, Operator,
};
use crate::sets::HalfSpace;
use crate::vector::{dot, norm_sq, Vector};

pub const WITNESS_TOL: f64 = 1e-10;
pub const FIXED_POINT_EXACT_TOL: f64 = 1e-12;

const DIM: usize = 5;
const BOX: f64 = 10.0;
const RELAXATIONS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: String,
    pub samples: usize,
    pub worst: f64,
    pub bound: Bound,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost(tol) => self.worst <= tol,
            Bound::AtLeast(tol) => self.worst >= tol,
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (rel, tol) = match self.bound {
            Bound::AtMost(t) => ("<=", t),
            Bound::AtLeast(t) => (">=", t),
        };
        write!(
            f,
            "[{}] {}: worst {:.3e} {} {:.0e} over {} samples",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            rel,
            tol,
            self.samples
        )
    }
}

struct Suite {
    name: String,
    bound: Bound,
    samples: usize,
    worst: f64,
}

impl Suite {
    fn new(name: impl Into<String>, bound: Bound) -> Self {
        let worst = match bound {
            Bound::AtMost(_) => f64::NEG_INFINITY,
            Bound::AtLeast(_) => f64::INFINITY,
        };
        Suite {
            name: name.into(),
            bound,
            samples: 0,
            worst,
        }
    }

    fn observe(&mut self, value: f64) {
        self.samples += 1;
        self.worst = match self.bound {
            Bound::AtMost(_) => self.worst.max(value),
            Bound::AtLeast(_) => self.worst.min(value),
        };
        if value.is_nan() {
            self.worst = f64::NAN;
        }
    }

    fn report(self) -> SuiteReport {
        SuiteReport {
            name: self.name,
            samples: self.samples,
            worst: self.worst,
            bound: self.bound,
        }
    }
}

/// Random convex set given as the sublevel set of an operator, with a
/// sampler for its points.
struct Instance {
    op: Arc<Operator>,
    /// Constraints `g(z) ≤ 0` describing `Fix op`, used to clip segments.
    members: Vec<Arc<dyn ConvexFunction>>,
    interior: Vec<f64>,
}

fn uniform_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..DIM).map(|_| rng.random_range(-BOX..BOX)).collect()
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = norm_sq(&v).sqrt();
        if len > 0.1 {
            return v.into_iter().map(|c| c / len).collect();
        }
    }
}

/// `⟨a, z⟩ ≤ ⟨a, anchor⟩ + slack·‖a‖`
fn random_affine(rng: &mut ChaCha8Rng, anchor: &[f64]) -> AffineFunction {
    let normal: Vec<f64> = random_direction(rng)
        .into_iter()
        .map(|c| c * rng.random_range(0.2..3.0))
        .collect();
    let slack = rng.random_range(0.5..2.0) * norm_sq(&normal).sqrt();
    AffineFunction {
        offset: dot(&normal, anchor) + slack,
        normal,
    }
}

#[derive(Clone, Copy, Debug)]
enum Elementary {
    HalfSpace,
    Linear,
    Quadratic,
    MaxAffine,
}

const ELEMENTARY: [Elementary; 4] = [
    Elementary::HalfSpace,
    Elementary::Linear,
    Elementary::Quadratic,
    Elementary::MaxAffine,
];

impl Elementary {
    fn name(self) -> &'static str {
        match self {
            Elementary::HalfSpace => "half-space projection",
            Elementary::Linear => "subgradient projection (linear f)",
            Elementary::Quadratic => "subgradient projection (quadratic f)",
            Elementary::MaxAffine => "subgradient projection (max-affine f)",
        }
    }

    fn sample(self, rng: &mut ChaCha8Rng, anchor: &[f64]) -> Instance {
        let (op, member): (Operator, Arc<dyn ConvexFunction>) = match self {
            Elementary::HalfSpace => {
                let f = random_affine(rng, anchor);
                let h = HalfSpace::new(Vector::new(f.normal.clone()).unwrap(), f.offset).unwrap();
                (Operator::projection(h), Arc::new(f))
            }
            Elementary::Linear => {
                let f: Arc<dyn ConvexFunction> = Arc::new(random_affine(rng, anchor));
                (Operator::subgradient(Arc::clone(&f)), f)
            }
            Elementary::Quadratic => {
                let f: Arc<dyn ConvexFunction> = Arc::new(DiagonalQuadratic {
                    weights: (0..DIM).map(|_| rng.random_range(0.1..2.0)).collect(),
                    center: anchor.to_vec(),
                    level: rng.random_range(1.0..10.0),
                });
                (Operator::subgradient(Arc::clone(&f)), f)
            }
            Elementary::MaxAffine => {
                let pieces = (0..3).map(|_| random_affine(rng, anchor)).collect();
                let f: Arc<dyn ConvexFunction> = Arc::new(MaxAffine { pieces });
                (Operator::subgradient(Arc::clone(&f)), f)
            }
        };
        Instance {
            op: Arc::new(op),
            members: vec![member],
            interior: anchor.to_vec(),
        }
    }
}

impl Instance {
    /// A point of `⋂ {g ≤ 0}` on the segment from the interior anchor
    /// towards a random point; lands on the boundary half of the time.
    fn fixed_point(&self, rng: &mut ChaCha8Rng) -> Vector {
        let target = uniform_point(rng);
        let d: Vec<f64> = target.iter().zip(&self.interior).map(|(t, c)| t - c).collect();
        let at = |t: f64| -> Vec<f64> { self.interior.iter().zip(&d).map(|(c, di)| c + t * di).collect() };
        let feasible = |t: f64| self.members.iter().all(|g| g.value(&at(t)) <= 0.0);
        // bisection for the largest feasible t in [0, 1]
        let t_max = if feasible(1.0) {
            1.0
        } else {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let t = if rng.random_bool(0.5) {
            t_max
        } else {
            t_max * rng.random_range(0.0..1.0)
        };
        Vector::new(at(t)).unwrap()
    }
}

fn block_instances(rng: &mut ChaCha8Rng, count: usize) -> (Vec<Instance>, Instance) {
    let anchor: Vec<f64> = (0..DIM).map(|_| rng.random_range(-3.0..3.0)).collect();
    let parts: Vec<Instance> = (0..count)
        .map(|_| {
            let kind = ELEMENTARY[rng.random_range(0..ELEMENTARY.len())];
            kind.sample(rng, &anchor)
        })
        .collect();
    let joint = Instance {
        op: Arc::new(Operator::identity(DIM)),
        members: parts.iter().flat_map(|p| p.members.iter().cloned()).collect(),
        interior: anchor,
    };
    (parts, joint)
}

fn random_weights(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    // push the rounding residue onto the last weight
    let rest: f64 = w[..count - 1].iter().sum();
    w[count - 1] = 1.0 - rest;
    w
}

/// Runs every operator suite with `samples` draws each.
pub fn run_operator_suites(seed: u64, samples: usize) -> Result<Vec<SuiteReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();
    let x_of = |rng: &mut ChaCha8Rng| Vector::new(uniform_point(rng)).unwrap();

    for kind in ELEMENTARY {
        let mut cutter = Suite::new(format!("cutter: {}", kind.name()), Bound::AtMost(WITNESS_TOL));
        let mut sqne: Vec<Suite> = RELAXATIONS
            .iter()
            .map(|a| {
                Suite::new(
                    format!("sqne rho=(2-a)/a: {} relaxed a={a}", kind.name()),
                    Bound::AtLeast(-WITNESS_TOL),
                )
            })
            .collect();
        let mut relaxed_cutter = Suite::new(
            format!("cutter: {} relaxed a=0.5", kind.name()),
            Bound::AtMost(WITNESS_TOL),
        );
        for _ in 0..samples {
            let anchor: Vec<f64> = (0..DIM).map(|_| rng.random_range(-3.0..3.0)).collect();
            let inst = kind.sample(&mut rng, &anchor);
            let (x, z) = (x_of(&mut rng), inst.fixed_point(&mut rng));
            cutter.observe(cutter_witness(&inst.op, &x, &z)?);
            for (suite, alpha) in sqne.iter_mut().zip(RELAXATIONS) {
                let r = relax(Arc::clone(&inst.op), alpha)?;
                suite.observe(sqne_witness(&r, (2.0 - alpha) / alpha, &x, &z)?);
            }
            let half = relax(Arc::clone(&inst.op), 0.5)?;
            relaxed_cutter.observe(cutter_witness(&half, &x, &z)?);
        }
        reports.push(cutter.report());
        reports.extend(sqne.into_iter().map(Suite::report));
        reports.push(relaxed_cutter.report());
    }

    let mut fne = Suite::new("fne: half-space projection", Bound::AtLeast(-WITNESS_TOL));
    let mut idempotent = Suite::new(
        "idempotence: half-space projection",
        Bound::AtMost(FIXED_POINT_EXACT_TOL),
    );
    for _ in 0..samples {
        let anchor: Vec<f64> = (0..DIM).map(|_| rng.random_range(-3.0..3.0)).collect();
        let inst = Elementary::HalfSpace.sample(&mut rng, &anchor);
        let (x, y) = (x_of(&mut rng), x_of(&mut rng));
        fne.observe(fne_witness(&inst.op, &x, &y)?);
        let px = inst.op.apply(&x)?;
        idempotent.observe(inst.op.apply(&px)?.distance(&px)?);
    }
    reports.push(fne.report());
    reports.push(idempotent.report());

    let mut sim_cutter = Suite::new("cutter: simultaneous", Bound::AtMost(WITNESS_TOL));
    let mut sim_sqne = Suite::new(
        "sqne rho=min rho_i: simultaneous of relaxed cutters",
        Bound::AtLeast(-WITNESS_TOL),
    );
    let mut comp_cutter = Suite::new("cutter: composition_half", Bound::AtMost(WITNESS_TOL));
    let mut comp_sqne = Suite::new(
        "sqne rho=1/m: raw composition of cutters",
        Bound::AtLeast(-WITNESS_TOL),
    );
    let mut maxprox_cutter = Suite::new("cutter: max_proximity", Bound::AtMost(WITNESS_TOL));
    let mut adaptive_cutter = Suite::new("cutter: adaptive simultaneous", Bound::AtMost(WITNESS_TOL));
    let mut preserved = Suite::new(
        "fixed points preserved: simultaneous/composition_half/max_proximity",
        Bound::AtMost(FIXED_POINT_EXACT_TOL),
    );
    for _ in 0..samples {
        let count = rng.random_range(2..=5);
        let (parts, joint) = block_instances(&mut rng, count);
        let children: Vec<Arc<Operator>> = parts.iter().map(|p| Arc::clone(&p.op)).collect();
        let block: Vec<usize> = (1..=count).collect();
        let (x, z) = (x_of(&mut rng), joint.fixed_point(&mut rng));

        let sim = simultaneous(children.clone(), random_weights(&mut rng, count))?;
        sim_cutter.observe(cutter_witness(&sim, &x, &z)?);

        let alphas: Vec<f64> = (0..count).map(|_| rng.random_range(0.2..1.9)).collect();
        let relaxed = children
            .iter()
            .zip(&alphas)
            .map(|(c, &a)| relax(Arc::clone(c), a).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let rho = alphas.iter().map(|a| (2.0 - a) / a).fold(f64::INFINITY, f64::min);
        let sim_relaxed = simultaneous(relaxed, random_weights(&mut rng, count))?;
        sim_sqne.observe(sqne_witness(&sim_relaxed, rho, &x, &z)?);

        let comp = composition_half(children.clone())?;
        comp_cutter.observe(cutter_witness(&comp, &x, &z)?);
        // id + 2(½(id + U) − id) = U_m ⋯ U_1
        let raw = relax(Arc::new(comp.clone()), 2.0)?;
        comp_sqne.observe(sqne_witness(&raw, 1.0 / count as f64, &x, &z)?);

        let (chosen, _) = max_proximity(&children, &block, &x)?;
        maxprox_cutter.observe(cutter_witness(&chosen, &x, &z)?);

        let adaptive = adaptive_operator(&children, &block, &x, AdaptiveMode::Residual)?;
        adaptive_cutter.observe(cutter_witness(&adaptive, &x, &z)?);

        let (at_z, _) = max_proximity(&children, &block, &z)?;
        let moved = [sim.apply(&z)?, comp.apply(&z)?, at_z.apply(&z)?]
            .iter()
            .map(|u| u.distance(&z))
            .collect::<Result<Vec<f64>>>()?;
        preserved.observe(moved.into_iter().fold(0.0, f64::max));
    }
    for s in [
        sim_cutter,
        sim_sqne,
        comp_cutter,
        comp_sqne,
        maxprox_cutter,
        adaptive_cutter,
        preserved,
    ] {
        reports.push(s.report());
    }

    reports.push(proximity_bounds(&mut rng, samples)?);
    Ok(reports)
}

/// For a ball `S = {w‖y − c‖² ≤ ℓ}` or a half-space, checks
/// `‖P_f y − y‖ = f⁺(y)/‖g‖` and `d(y, S) ≥ ‖P_f y − y‖`; reports the worst
/// violation of either.
fn proximity_bounds(rng: &mut ChaCha8Rng, samples: usize) -> Result<SuiteReport> {
    let mut suite = Suite::new(
        "proximity bounds: |P_f y - y| = f+/|g| <= d(y, S)",
        Bound::AtMost(WITNESS_TOL),
    );
    for i in 0..samples {
        let y = uniform_point(rng);
        let center: Vec<f64> = (0..DIM).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (f, dist): (Arc<dyn ConvexFunction>, f64) = if i % 2 == 0 {
            let a = random_affine(rng, &center);
            let d = a.value(&y).max(0.0) / norm_sq(&a.normal).sqrt();
            (Arc::new(a), d)
        } else {
            let w: f64 = rng.random_range(0.1..2.0);
            let level = rng.random_range(1.0..10.0);
            let radius = (level / w).sqrt();
            let r = norm_sq(&y.iter().zip(&center).map(|(a, b)| a - b).collect::<Vec<_>>()).sqrt();
            let quad = DiagonalQuadratic {
                weights: vec![w; DIM],
                center,
                level,
            };
            (Arc::new(quad), (r - radius).max(0.0))
        };
        let op = Operator::subgradient(Arc::clone(&f));
        let yv = Vector::new(y.clone()).unwrap();
        let step = op.apply(&yv)?.distance(&yv)?;
        let mut g = vec![0.0; DIM];
        f.subgradient(&y, &mut g);
        let predicted = f.value(&y).max(0.0) / norm_sq(&g).sqrt();
        suite.observe((step - predicted).abs().max(step - dist));
    }
    Ok(suite.report())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass() {
        let reports = run_operator_suites(7, 300).unwrap();
        for r in &reports {
            assert!(r.passed(), "{r}");
            assert_eq!(r.samples, 300);
        }
        assert!(reports.len() >= 20);
    }

    #[test]
    fn a_broken_bound_is_reported() {
        let mut s = Suite::new("x", Bound::AtMost(0.0));
        s.observe(-1.0);
        s.observe(0.5);
        let r = s.report();
        assert!(!r.passed());
        assert!(r.to_string().starts_with("[FAIL] x"));
        let mut s = Suite::new("y", Bound::AtLeast(0.0));
        s.observe(f64::NAN);
        assert!(!s.report().passed());
    }
}
