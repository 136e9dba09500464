//! Dykstra's cyclic projection scheme for `P_C` with `C` a polyhedron.
//!
//! Each half-space keeps a correction vector `pᵢ`; a sweep replaces the
//! current point `x` by `P_{Cᵢ}(x + pᵢ)` for `i = 1, …, m` and updates
//! `pᵢ ← x + pᵢ − P_{Cᵢ}(x + pᵢ)`. Iterates converge to the metric
//! projection onto the intersection, which is the solution of the
//! variational inequality with `F = id − point`.

use crate::error::{Error, Result};
use crate::sets::Polyhedron;
use crate::vector::{dist_sq, Vector};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DykstraOptions {
    pub max_sweeps: usize,
    /// Stop once `(Σᵢ ‖Δpᵢ‖²)^{1/2}` over a sweep drops below this.
    pub tol: f64,
}

impl Default for DykstraOptions {
    fn default() -> Self {
        DykstraOptions {
            max_sweeps: 100_000,
            tol: 1e-10,
        }
    }
}

pub fn dykstra_project(point: &Vector, p: &Polyhedron, opts: DykstraOptions) -> Result<Vector> {
    point.check_dim(p.dim())?;
    let n = p.dim();
    let m = p.len();
    let mut x = point.as_slice().to_vec();
    let mut corrections = vec![0.0; n * m];
    let mut y = vec![0.0; n];
    let mut change = f64::INFINITY;

    for _ in 0..opts.max_sweeps {
        let mut sweep_change = 0.0;
        for (h, corr) in p.constraints().iter().zip(corrections.chunks_exact_mut(n)) {
            for ((yj, xj), cj) in y.iter_mut().zip(&x).zip(corr.iter()) {
                *yj = xj + cj;
            }
            x.copy_from_slice(&y);
            h.project_raw(&mut x);
            // new correction is y − x
            let mut delta = 0.0;
            for ((cj, yj), xj) in corr.iter_mut().zip(&y).zip(&x) {
                let updated = yj - xj;
                delta += (updated - *cj) * (updated - *cj);
                *cj = updated;
            }
            sweep_change += delta;
        }
        change = sweep_change.sqrt();
        if !change.is_finite() {
            break;
        }
        if change < opts.tol {
            return Vector::from_computed(x);
        }
    }
    Err(Error::NoConvergence {
        sweeps: opts.max_sweeps,
        change,
    })
}

/// `d(x, C)` measured through the Dykstra projection.
pub fn distance_to_polyhedron(x: &Vector, p: &Polyhedron, opts: DykstraOptions) -> Result<f64> {
    let proj = dykstra_project(x, p, opts)?;
    Ok(dist_sq(x.as_slice(), proj.as_slice()).sqrt())
}
