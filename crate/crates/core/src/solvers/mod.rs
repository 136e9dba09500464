//! Iterative methods for `VI(F, C)`.
//!
//! The outer approximation step evaluates a cutter `T_k` at `x^k`, forms the
//! half-space `H_k = {z : ⟨z − T_k x^k, x^k − T_k x^k⟩ ≤ 0} ⊇ C` and moves the
//! descent point `z^k = x^k − λ_k F x^k` towards it with relaxation `α_k`.
//! Only the single projection onto `H_k` is ever computed, never `P_C`.

mod dykstra;

use std::sync::Arc;

use serde::Serialize;

pub use dykstra::{distance_to_polyhedron, dykstra_project, DykstraOptions};

use crate::controls::{cyclic_index, BlockControl, PathMode};
use crate::error::{Error, Result};
use crate::operators::{
    adaptive_operator, composition_half, max_proximity, relax, simultaneous, AdaptiveMode,
    Operator,
};
use crate::problem::{Field, ViProblem};
use crate::trace::{RunTrace, TraceRecord};
use crate::vector::{all_finite, dot, norm_sq, Vector};

/// `‖T_k x − x‖ ≤ FIXED_POINT_TOL·(1 + ‖x‖)` is treated as `x ∈ Fix T_k`.
pub const FIXED_POINT_TOL: f64 = 1e-14;

pub const DEFAULT_STRIDE: usize = 50;

/// Step sizes `λ_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `1/(k+1)`
    Harmonic,
    Constant { value: f64 },
    /// `scale/(k+1)^exponent`
    Power { scale: f64, exponent: f64 },
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Harmonic
    }
}

impl StepSchedule {
    pub fn lambda(&self, k: usize) -> f64 {
        match *self {
            StepSchedule::Harmonic => 1.0 / (k as f64 + 1.0),
            StepSchedule::Constant { value } => value,
            StepSchedule::Power { scale, exponent } => scale / (k as f64 + 1.0).powf(exponent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::Harmonic => true,
            StepSchedule::Constant { value } => value >= 0.0 && value.is_finite(),
            StepSchedule::Power { scale, exponent } => {
                scale >= 0.0 && scale.is_finite() && exponent.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("step schedule {self:?}")))
        }
    }

    /// Parses `harmonic`, `const:<v>` or `power:<scale>:<exponent>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown step schedule '{spec}'"));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = spec.split(':').collect();
        let schedule = match parts.as_slice() {
            ["harmonic"] => StepSchedule::Harmonic,
            ["const", v] => StepSchedule::Constant { value: num(v)? },
            ["power", s, e] => StepSchedule::Power {
                scale: num(s)?,
                exponent: num(e)?,
            },
            _ => return Err(bad()),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

/// Relaxation parameters `α_k ∈ [ε, 2 − ε]`, cycling through `values`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelaxationSchedule {
    values: Vec<f64>,
    epsilon: f64,
}

impl Default for RelaxationSchedule {
    fn default() -> Self {
        RelaxationSchedule {
            values: vec![1.0],
            epsilon: 1.0,
        }
    }
}

impl RelaxationSchedule {
    pub fn constant(alpha: f64) -> Result<Self> {
        Self::cyclic(vec![alpha], alpha.min(2.0 - alpha))
    }

    pub fn cyclic(values: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "relaxation bound epsilon = {epsilon} outside (0, 1]"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidConfig("empty relaxation schedule".into()));
        }
        if let Some(a) = values.iter().find(|&&a| !(a >= epsilon && a <= 2.0 - epsilon)) {
            return Err(Error::InvalidConfig(format!(
                "relaxation {a} outside [{epsilon}, {}]",
                2.0 - epsilon
            )));
        }
        Ok(RelaxationSchedule { values, epsilon })
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.values[k % self.values.len()]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    OuterApproximation,
    HybridSteepestDescent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorFamily {
    /// `T_k = U_{[k]}`
    Cyclic,
    /// `T_k = U_{i_k}`, `i_k = argmax_{i ∈ I_k} pᵢ(x^k)`
    MaxProximity,
    /// `T_k = Σ_{i ∈ I_k} ωᵢ Uᵢ`
    Simultaneous,
    /// `T_k = ½(id + Π_{i ∈ I_k} Uᵢ)`
    Composition,
}

impl OperatorFamily {
    pub fn name(self) -> &'static str {
        match self {
            OperatorFamily::Cyclic => "cyclic",
            OperatorFamily::MaxProximity => "maxprox",
            OperatorFamily::Simultaneous => "simultaneous",
            OperatorFamily::Composition => "composition",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    Residual,
    Displacement,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodConfig {
    pub scheme: Scheme,
    pub family: OperatorFamily,
    pub block_size: usize,
    pub augmented: bool,
    pub weighting: Weighting,
    pub step: StepSchedule,
    pub relaxation: RelaxationSchedule,
    /// `x^0`; the origin when unset.
    #[serde(skip)]
    pub start: Option<Vector>,
}

impl MethodConfig {
    pub fn new(family: OperatorFamily, block_size: usize) -> Self {
        MethodConfig {
            scheme: Scheme::OuterApproximation,
            family,
            block_size,
            augmented: false,
            weighting: Weighting::Uniform,
            step: StepSchedule::Harmonic,
            relaxation: RelaxationSchedule::default(),
            start: None,
        }
    }

    pub fn cyclic() -> Self {
        Self::new(OperatorFamily::Cyclic, 1)
    }

    pub fn augmented(mut self, augmented: bool) -> Self {
        self.augmented = augmented;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_start(mut self, start: Vector) -> Self {
        self.start = Some(start);
        self
    }

    /// e.g. `cyclic`, `maxprox b=20`, `composition b=20+`.
    pub fn label(&self) -> String {
        let mut label = String::new();
        if self.scheme == Scheme::HybridSteepestDescent {
            label.push_str("hsd ");
        }
        label.push_str(self.family.name());
        if self.family != OperatorFamily::Cyclic {
            label.push_str(&format!(" b={}", self.block_size));
            if self.augmented {
                label.push('+');
            }
        }
        match self.weighting {
            Weighting::Uniform => {}
            Weighting::Residual => label.push_str(" w=residual"),
            Weighting::Displacement => label.push_str(" w=displacement"),
        }
        label
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if self.block_size == 0 || self.block_size > m {
            return Err(Error::InvalidConfig(format!(
                "block size {} outside [1, {m}]",
                self.block_size
            )));
        }
        if self.family == OperatorFamily::Cyclic {
            if self.augmented {
                return Err(Error::InvalidConfig(
                    "the cyclic method has no augmented variant; use maxprox with block 1 and augmented for cyclic+"
                        .into(),
                ));
            }
            if self.block_size != 1 {
                return Err(Error::InvalidConfig(
                    "the cyclic method uses single indices; block must be 1".into(),
                ));
            }
        }
        if self.weighting != Weighting::Uniform && self.family != OperatorFamily::Simultaneous {
            return Err(Error::InvalidConfig(
                "adaptive weights only apply to the simultaneous method".into(),
            ));
        }
        self.step.validate()
    }
}

/// Elementary cutters `Uᵢ = P_{Cᵢ}` for every constraint of `problem`.
pub fn projection_family(problem: &ViProblem) -> Vec<Arc<Operator>> {
    problem
        .constraints()
        .constraints()
        .iter()
        .map(|h| Arc::new(Operator::projection(h.clone())))
        .collect()
}

/// Outcome of one outer approximation step.
#[derive(Clone, Debug)]
pub struct OuterStep {
    pub next: Vector,
    /// `z^k = x^k − λ_k F x^k`
    pub descent_point: Vector,
    /// `T_k x^k`
    pub operator_point: Vector,
    pub operator_residual: f64,
    /// Whether `z^k ∈ H_k`, in which case `next = z^k`.
    pub descent_in_halfspace: bool,
}

fn divergence(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite { .. } => Error::Divergence { iteration },
        other => other,
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("step size {lambda} must be >= 0")))
    }
}

/// `x^{k+1} = R_k z^k` with `R_k = id + α_k(P_{H_k} − id)`.
pub fn outer_step(
    x: &Vector,
    iteration: usize,
    t_k: &Operator,
    field: &Field,
    lambda: f64,
    alpha: f64,
) -> Result<OuterStep> {
    check_lambda(lambda)?;
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::InvalidRelaxation(alpha));
    }
    x.check_dim(t_k.dim())?;
    x.check_dim(field.dim())?;
    let xs = x.as_slice();
    let n = xs.len();

    let mut t = xs.to_vec();
    t_k.apply_in_place(&mut t).map_err(divergence(iteration))?;

    let mut z = vec![0.0; n];
    field.eval_raw(xs, &mut z);
    for (zi, xi) in z.iter_mut().zip(xs) {
        *zi = xi - lambda * *zi;
    }

    let d: Vec<f64> = xs.iter().zip(&t).map(|(a, b)| a - b).collect();
    let d_sq = norm_sq(&d);
    let residual = d_sq.sqrt();
    let mut next = z.clone();
    let mut inside = true;
    if residual > FIXED_POINT_TOL * (1.0 + norm_sq(xs).sqrt()) {
        let zt: Vec<f64> = z.iter().zip(&t).map(|(a, b)| a - b).collect();
        let c = dot(&zt, &d);
        if c > 0.0 {
            inside = false;
            let step = alpha * c / d_sq;
            for (ni, di) in next.iter_mut().zip(&d) {
                *ni -= step * di;
            }
        }
    }

    if !(all_finite(&next) && all_finite(&t) && residual.is_finite()) {
        return Err(Error::Divergence { iteration });
    }
    Ok(OuterStep {
        next: Vector::from_computed(next)?,
        descent_point: Vector::from_computed(z)?,
        operator_point: Vector::from_computed(t)?,
        operator_residual: residual,
        descent_in_halfspace: inside,
    })
}

/// `z^{k+1} = R_k z^k − λ_k F(R_k z^k)`.
pub fn hsd_step(
    z: &Vector,
    iteration: usize,
    r_k: &Operator,
    field: &Field,
    lambda: f64,
) -> Result<Vector> {
    check_lambda(lambda)?;
    z.check_dim(r_k.dim())?;
    let mut r = z.as_slice().to_vec();
    r_k.apply_in_place(&mut r).map_err(divergence(iteration))?;
    let mut f = vec![0.0; r.len()];
    field.eval_raw(&r, &mut f);
    let next: Vec<f64> = r.iter().zip(&f).map(|(ri, fi)| ri - lambda * fi).collect();
    Vector::from_computed(next).map_err(divergence(iteration))
}

/// `P_C(x − λ F x)` for an exact projector onto `C`.
pub fn gradient_projection_step<P>(x: &Vector, projector: P, field: &Field, lambda: f64) -> Result<Vector>
where
    P: Fn(&Vector) -> Result<Vector>,
{
    check_lambda(lambda)?;
    let fx = field.eval(x)?;
    let descent = x.sub(&fx.scale(lambda)?)?;
    projector(&descent)
}

/// Iteration state of one run.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Vector,
    pub k: usize,
    pub control: Option<BlockControl>,
    pub last_operator_residual: Option<f64>,
    /// 1-based indices used by the most recent `T_k`.
    pub last_block: Vec<usize>,
}

/// Stepwise driver for the outer approximation and HSD methods.
pub struct Solver<'a> {
    problem: &'a ViProblem,
    family: Vec<Arc<Operator>>,
    config: MethodConfig,
    state: SolverState,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a ViProblem, config: MethodConfig) -> Result<Self> {
        Self::with_family(problem, projection_family(problem), config)
    }

    /// Uses `family[i − 1]` as `Uᵢ` (e.g. subgradient projections) instead of
    /// the half-space projections of the problem's constraints.
    pub fn with_family(
        problem: &'a ViProblem,
        family: Vec<Arc<Operator>>,
        config: MethodConfig,
    ) -> Result<Self> {
        let m = family.len();
        if m == 0 {
            return Err(Error::EmptyOperatorList);
        }
        for u in &family {
            if u.dim() != problem.dim() {
                return Err(Error::DimensionMismatch {
                    expected: problem.dim(),
                    got: u.dim(),
                });
            }
        }
        config.validate(m)?;
        let x = match &config.start {
            Some(x0) => {
                x0.check_dim(problem.dim())?;
                x0.clone()
            }
            None => Vector::zeros(problem.dim()),
        };
        let control = match config.family {
            OperatorFamily::Cyclic => None,
            _ if config.augmented => Some(BlockControl::augmented(m, config.block_size)?),
            _ => Some(BlockControl::fixed(m, config.block_size)?),
        };
        Ok(Solver {
            problem,
            family,
            config,
            state: SolverState {
                x,
                k: 0,
                control,
                last_operator_residual: None,
                last_block: Vec::new(),
            },
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn family(&self) -> &[Arc<Operator>] {
        &self.family
    }

    /// Builds `T_k` at `x`, advancing `control`.
    fn build_operator(
        &self,
        k: usize,
        x: &Vector,
        control: &mut Option<BlockControl>,
    ) -> Result<(Arc<Operator>, Vec<usize>)> {
        let family = &self.family;
        let block = match control {
            None => vec![cyclic_index(k, family.len())],
            Some(c) if self.config.augmented => {
                let path = if self.config.family == OperatorFamily::Composition {
                    PathMode::Composition
                } else {
                    PathMode::Pointwise
                };
                c.next_augmented_block(x, family, path)?
            }
            Some(c) => c.next_fixed_block()?,
        };
        let pick = |block: &[usize]| -> Vec<Arc<Operator>> {
            block.iter().map(|&i| Arc::clone(&family[i - 1])).collect()
        };
        let op = match self.config.family {
            OperatorFamily::Cyclic => Arc::clone(&family[block[0] - 1]),
            OperatorFamily::MaxProximity => max_proximity(family, &block, x)?.0,
            OperatorFamily::Simultaneous => Arc::new(match self.config.weighting {
                Weighting::Uniform => {
                    let w = 1.0 / block.len() as f64;
                    simultaneous(pick(&block), vec![w; block.len()])?
                }
                Weighting::Residual => adaptive_operator(family, &block, x, AdaptiveMode::Residual)?,
                Weighting::Displacement => {
                    adaptive_operator(family, &block, x, AdaptiveMode::Displacement)?
                }
            }),
            OperatorFamily::Composition => Arc::new(composition_half(pick(&block))?),
        };
        Ok((op, block))
    }

    /// `T_k` for the current iterate without advancing the control.
    pub fn peek_operator(&self) -> Result<(Arc<Operator>, Vec<usize>)> {
        let mut control = self.state.control.clone();
        self.build_operator(self.state.k, &self.state.x, &mut control)
    }

    /// Performs one step; for the outer approximation scheme the full step
    /// detail is returned.
    pub fn step(&mut self) -> Result<Option<OuterStep>> {
        let k = self.state.k;
        let lambda = self.config.step.lambda(k);
        let alpha = self.config.relaxation.alpha(k);
        let mut control = self.state.control.take();
        let built = self.build_operator(k, &self.state.x, &mut control);
        self.state.control = control;
        let (t_k, block) = built?;
        let field = self.problem.field();

        let (next, residual, detail) = match self.config.scheme {
            Scheme::OuterApproximation => {
                let step = outer_step(&self.state.x, k, &t_k, field, lambda, alpha)?;
                (step.next.clone(), step.operator_residual, Some(step))
            }
            Scheme::HybridSteepestDescent => {
                let residual = t_k.apply(&self.state.x).map_err(divergence(k))?.distance(&self.state.x)?;
                let r_k = relax(t_k, alpha)?;
                (hsd_step(&self.state.x, k, &r_k, field, lambda)?, residual, None)
            }
        };
        self.state.x = next;
        self.state.k += 1;
        self.state.last_operator_residual = Some(residual);
        self.state.last_block = block;
        Ok(detail)
    }

    fn record(&self, operator_residual: f64) -> TraceRecord {
        let x = self.state.x.as_slice();
        let p = self.problem.constraints();
        TraceRecord {
            k: self.state.k,
            x: self.state.x.clone(),
            operator_residual,
            max_residual: p.max_residual_raw(x).1,
            distance_estimate: p.distance_lower_bound_raw(x),
            err_log10: None,
        }
    }

    /// Runs `iterations` steps, recording every `stride`-th iterate and the
    /// last one.
    pub fn run(mut self, iterations: usize, stride: usize) -> Result<RunTrace> {
        if stride == 0 {
            return Err(Error::InvalidConfig("trace stride must be >= 1".into()));
        }
        let mut records = Vec::with_capacity(iterations / stride + 2);
        for _ in 0..iterations {
            let snapshot = (self.state.k % stride == 0).then(|| self.record(0.0));
            self.step()?;
            if let Some(mut r) = snapshot {
                r.operator_residual = self.state.last_operator_residual.unwrap_or(0.0);
                records.push(r);
            }
        }
        let (t_final, _) = self.peek_operator()?;
        let final_residual = t_final
            .apply(&self.state.x)
            .map_err(divergence(self.state.k))?
            .distance(&self.state.x)?;
        records.push(self.record(final_residual));
        Ok(RunTrace {
            seed: None,
            method: self.config.label(),
            records,
            absolute_error: false,
        })
    }
}

/// Runs `config` on `problem` with the half-space projections as `Uᵢ`.
pub fn solve(
    problem: &ViProblem,
    config: &MethodConfig,
    iterations: usize,
    stride: usize,
) -> Result<RunTrace> {
    Solver::new(problem, config.clone())?.run(iterations, stride)
}
