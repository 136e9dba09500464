//! Cutter operators and the block algorithmic operators built from them.
//!
//! An operator `U: ℝⁿ → ℝⁿ` is a *cutter* when `⟨z − Ux, x − Ux⟩ ≤ 0` for
//! every `x` and every fixed point `z`. Metric projections onto half-spaces
//! and subgradient projections are the elementary cutters here; relaxations,
//! convex combinations and half-averaged compositions of them are built on
//! top and keep `⋂ Fix Uᵢ` inside their fixed-point set.
//!
//! Composite operators share their children through [`Arc`], so assembling a
//! block operator every iteration only bumps reference counts.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sets::HalfSpace;
use crate::vector::{axpy, dist_sq, dot, norm_sq, Vector};

/// Tolerance on `Σ ωᵢ = 1` for simultaneous operators.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A convex function with a deterministic subgradient selection.
pub trait ConvexFunction: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes some `g ∈ ∂f(x)` into `out`.
    fn subgradient(&self, x: &[f64], out: &mut [f64]);
}

/// `f(x) = ⟨a, x⟩ − β`; its subgradient projection is `P_H` for
/// `H = {⟨a, z⟩ ≤ β}`.
#[derive(Clone, Debug)]
pub struct AffineFunction {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl ConvexFunction for AffineFunction {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    fn subgradient(&self, _x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.normal);
    }
}

/// `f(x) = Σ dᵢ (xᵢ − cᵢ)² − r` with `dᵢ ≥ 0`.
#[derive(Clone, Debug)]
pub struct DiagonalQuadratic {
    pub weights: Vec<f64>,
    pub center: Vec<f64>,
    pub level: f64,
}

impl ConvexFunction for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.center)
            .zip(x)
            .map(|((d, c), xi)| d * (xi - c) * (xi - c))
            .sum::<f64>()
            - self.level
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        for (((o, d), c), xi) in out.iter_mut().zip(&self.weights).zip(&self.center).zip(x) {
            *o = 2.0 * d * (xi - c);
        }
    }
}

/// `f(x) = maxⱼ (⟨aⱼ, x⟩ − βⱼ)`; the subgradient is the normal of the
/// lowest-index active piece.
#[derive(Clone, Debug)]
pub struct MaxAffine {
    pub pieces: Vec<AffineFunction>,
}

impl MaxAffine {
    fn active_piece(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, self.pieces[0].value(x));
        for (j, p) in self.pieces.iter().enumerate().skip(1) {
            let v = p.value(x);
            if v > best.1 {
                best = (j, v);
            }
        }
        best
    }
}

impl ConvexFunction for MaxAffine {
    fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.active_piece(x).1
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        let (j, _) = self.active_piece(x);
        out.copy_from_slice(&self.pieces[j].normal);
    }
}

#[derive(Clone, Debug)]
pub enum Operator {
    Identity { dim: usize },
    HalfSpaceProjection(HalfSpace),
    SubgradientProjection(Arc<dyn ConvexFunction>),
    Relaxation {
        inner: Arc<Operator>,
        alpha: f64,
    },
    Simultaneous {
        children: Vec<Arc<Operator>>,
        weights: Vec<f64>,
    },
    /// `½(id + U_m ⋯ U_1)`, children applied in list order.
    CompositionHalf { children: Vec<Arc<Operator>> },
}

impl Operator {
    pub fn identity(dim: usize) -> Self {
        Operator::Identity { dim }
    }

    pub fn projection(h: HalfSpace) -> Self {
        Operator::HalfSpaceProjection(h)
    }

    pub fn subgradient(f: Arc<dyn ConvexFunction>) -> Self {
        Operator::SubgradientProjection(f)
    }

    pub fn dim(&self) -> usize {
        match self {
            Operator::Identity { dim } => *dim,
            Operator::HalfSpaceProjection(h) => h.dim(),
            Operator::SubgradientProjection(f) => f.dim(),
            Operator::Relaxation { inner, .. } => inner.dim(),
            Operator::Simultaneous { children, .. } | Operator::CompositionHalf { children } => {
                children[0].dim()
            }
        }
    }

    /// Whether this operator carries one of the elementary proximity
    /// functions (`(⟨a,x⟩−β)₊` or `f⁺`) rather than the `‖Ux − x‖` default.
    pub fn has_native_proximity(&self) -> bool {
        matches!(
            self,
            Operator::Identity { .. }
                | Operator::HalfSpaceProjection(_)
                | Operator::SubgradientProjection(_)
        )
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim())?;
        let mut y = x.as_slice().to_vec();
        self.apply_in_place(&mut y)?;
        Vector::from_computed(y)
    }

    /// Proximity `p(x)` with `p⁻¹(0) = Fix U`.
    pub fn proximity(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.dim())?;
        self.proximity_raw(x.as_slice())
    }

    pub fn is_fixed_point(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.proximity(x)? <= tol)
    }

    pub(crate) fn apply_in_place(&self, x: &mut [f64]) -> Result<()> {
        match self {
            Operator::Identity { .. } => {}
            Operator::HalfSpaceProjection(h) => h.project_raw(x),
            Operator::SubgradientProjection(f) => subgradient_step(f.as_ref(), x)?,
            Operator::Relaxation { inner, alpha } => {
                let mut y = x.to_vec();
                inner.apply_in_place(&mut y)?;
                for (xi, yi) in x.iter_mut().zip(&y) {
                    *xi += alpha * (yi - *xi);
                }
            }
            Operator::Simultaneous { children, weights } => {
                let mut acc = vec![0.0; x.len()];
                let mut y = vec![0.0; x.len()];
                for (child, w) in children.iter().zip(weights) {
                    y.copy_from_slice(x);
                    child.apply_in_place(&mut y)?;
                    axpy(*w, &y, &mut acc);
                }
                x.copy_from_slice(&acc);
            }
            Operator::CompositionHalf { children } => {
                let mut y = x.to_vec();
                for child in children {
                    child.apply_in_place(&mut y)?;
                }
                for (xi, yi) in x.iter_mut().zip(&y) {
                    *xi = 0.5 * (*xi + yi);
                }
            }
        }
        Ok(())
    }

    pub(crate) fn proximity_raw(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Operator::Identity { .. } => 0.0,
            Operator::HalfSpaceProjection(h) => h.residual_raw(x),
            Operator::SubgradientProjection(f) => f.value(x).max(0.0),
            _ => {
                let mut y = x.to_vec();
                self.apply_in_place(&mut y)?;
                dist_sq(x, &y).sqrt()
            }
        })
    }
}

fn subgradient_step(f: &dyn ConvexFunction, x: &mut [f64]) -> Result<()> {
    let value = f.value(x);
    if value > 0.0 {
        let mut g = vec![0.0; x.len()];
        f.subgradient(x, &mut g);
        let g_sq = norm_sq(&g);
        if g_sq == 0.0 {
            return Err(Error::InconsistentSubgradient { value });
        }
        axpy(-value / g_sq, &g, x);
    }
    Ok(())
}

/// Metric projection `x − ((⟨a,x⟩−β)₊/‖a‖²)·a`.
pub fn project_halfspace(h: &HalfSpace, x: &Vector) -> Result<Vector> {
    x.check_dim(h.dim())?;
    let mut y = x.as_slice().to_vec();
    h.project_raw(&mut y);
    Vector::from_computed(y)
}

/// Subgradient projection `x − (f(x)/‖g‖²)·g` when `f(x) > 0`, else `x`.
pub fn subgradient_projection(f: &dyn ConvexFunction, x: &Vector) -> Result<Vector> {
    x.check_dim(f.dim())?;
    let mut y = x.as_slice().to_vec();
    subgradient_step(f, &mut y)?;
    Vector::from_computed(y)
}

/// The α-relaxation `x ↦ x + α(Ux − x)`, `α ∈ (0, 2]`.
pub fn relax(u: impl Into<Arc<Operator>>, alpha: f64) -> Result<Operator> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidRelaxation(alpha));
    }
    Ok(Operator::Relaxation {
        inner: u.into(),
        alpha,
    })
}

/// `x ↦ Σ ωᵢ Uᵢx` with positive weights summing to one.
pub fn simultaneous(children: Vec<Arc<Operator>>, weights: Vec<f64>) -> Result<Operator> {
    let dim = check_children(&children)?;
    if weights.len() != children.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} operators",
            weights.len(),
            children.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && **w <= 1.0)) {
        return Err(Error::InvalidWeights(format!("weight {w} outside (0, 1]")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    debug_assert!(children.iter().all(|c| c.dim() == dim));
    Ok(Operator::Simultaneous { children, weights })
}

/// `x ↦ ½(x + U_m(⋯(U_1 x)))`, applying the list front to back.
pub fn composition_half(children: Vec<Arc<Operator>>) -> Result<Operator> {
    check_children(&children)?;
    Ok(Operator::CompositionHalf { children })
}

fn check_children(children: &[Arc<Operator>]) -> Result<usize> {
    let dim = children.first().ok_or(Error::EmptyOperatorList)?.dim();
    for c in children {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: c.dim(),
            });
        }
    }
    Ok(dim)
}

fn check_block(block: &[usize], m: usize) -> Result<()> {
    if block.is_empty() {
        return Err(Error::EmptyBlock);
    }
    if let Some(&index) = block.iter().find(|&&i| i == 0 || i > m) {
        return Err(Error::IndexOutOfRange { index, m });
    }
    Ok(())
}

/// Picks `Uᵢ` with `i = argmax_{i ∈ block} pᵢ(x)`; `block` holds 1-based
/// indices into `children`, ties go to the lowest index.
pub fn max_proximity(
    children: &[Arc<Operator>],
    block: &[usize],
    x: &Vector,
) -> Result<(Arc<Operator>, usize)> {
    check_block(block, children.len())?;
    let mut best: Option<(usize, f64)> = None;
    for &i in block {
        let child = &children[i - 1];
        if !child.has_native_proximity() {
            log::debug!("operator {i} uses the displacement proximity");
        }
        let p = child.proximity(x)?;
        best = match best {
            Some((j, q)) if q > p || (q == p && j < i) => Some((j, q)),
            _ => Some((i, p)),
        };
    }
    let (index, _) = best.expect("block is nonempty");
    Ok((Arc::clone(&children[index - 1]), index))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptiveMode {
    /// `ωᵢ ∝ pᵢ(x)`
    Residual,
    /// `ωᵢ ∝ ‖Uᵢx − x‖`
    Displacement,
}

/// Weights proportional to `pᵢ(x)` (or `‖Uᵢx − x‖`) over `block`.
///
/// When every numerator vanishes the weights fall back to `1/|block|`.
/// Entries whose numerator is zero get weight zero, so the result is not
/// directly usable with [`simultaneous`]; see [`adaptive_operator`].
pub fn adaptive_weights(
    children: &[Arc<Operator>],
    block: &[usize],
    x: &Vector,
    mode: AdaptiveMode,
) -> Result<Vec<f64>> {
    check_block(block, children.len())?;
    let numerators = block
        .iter()
        .map(|&i| {
            let child = &children[i - 1];
            match mode {
                AdaptiveMode::Residual => child.proximity(x),
                AdaptiveMode::Displacement => Ok(child.apply(x)?.distance(x)?),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = numerators.iter().sum();
    if total > 0.0 {
        Ok(numerators.iter().map(|p| p / total).collect())
    } else {
        Ok(vec![1.0 / block.len() as f64; block.len()])
    }
}

/// Simultaneous operator with adaptive weights, dropping zero-weight
/// children (they are fixed at `x` and contribute `x` anyway).
pub fn adaptive_operator(
    children: &[Arc<Operator>],
    block: &[usize],
    x: &Vector,
    mode: AdaptiveMode,
) -> Result<Operator> {
    let weights = adaptive_weights(children, block, x, mode)?;
    let (picked, w): (Vec<_>, Vec<_>) = block
        .iter()
        .zip(weights)
        .filter(|(_, w)| *w > 0.0)
        .map(|(&i, w)| (Arc::clone(&children[i - 1]), w))
        .unzip();
    let total: f64 = w.iter().sum();
    let w = w.into_iter().map(|wi| wi / total).collect();
    simultaneous(picked, w)
}

/// `⟨z − Ux, x − Ux⟩`, nonpositive for a cutter and `z ∈ Fix U`.
pub fn cutter_witness(u: &Operator, x: &Vector, z: &Vector) -> Result<f64> {
    z.check_dim(x.dim())?;
    let ux = u.apply(x)?;
    let (x, z, ux) = (x.as_slice(), z.as_slice(), ux.as_slice());
    let lhs: Vec<f64> = z.iter().zip(ux).map(|(a, b)| a - b).collect();
    let rhs: Vec<f64> = x.iter().zip(ux).map(|(a, b)| a - b).collect();
    Ok(dot(&lhs, &rhs))
}

/// `‖x − z‖² − ρ‖Ux − x‖² − ‖Ux − z‖²`, nonnegative for a ρ-SQNE operator.
pub fn sqne_witness(u: &Operator, rho: f64, x: &Vector, z: &Vector) -> Result<f64> {
    z.check_dim(x.dim())?;
    let ux = u.apply(x)?;
    let (x, z, ux) = (x.as_slice(), z.as_slice(), ux.as_slice());
    Ok(dist_sq(x, z) - rho * dist_sq(ux, x) - dist_sq(ux, z))
}

/// `⟨Ux − Uy, x − y⟩ − ‖Ux − Uy‖²`, nonnegative for a firmly nonexpansive
/// operator.
pub fn fne_witness(u: &Operator, x: &Vector, y: &Vector) -> Result<f64> {
    let (ux, uy) = (u.apply(x)?, u.apply(y)?);
    let du: Vec<f64> = ux.iter().zip(uy.iter()).map(|(a, b)| a - b).collect();
    let dx: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
    Ok(dot(&du, &dx) - norm_sq(&du))
}
