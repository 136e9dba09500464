//! Half-spaces `{z : ⟨a, z⟩ ≤ β}` and their finite intersections.
//!
//! Constraint indices are 1-based everywhere they leave this crate, so the
//! index set of an `m`-constraint polyhedron is `{1, …, m}`.

use crate::error::{Error, Result};
use crate::vector::{dot, Vector};

/// Default absolute tolerance on the residual for membership tests.
pub const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
    normal_sq: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(Error::NonFinite {
                index: 0,
                value: offset,
            });
        }
        let normal_sq = normal.norm_squared();
        if normal_sq == 0.0 {
            return Err(Error::ZeroNormal);
        }
        Ok(HalfSpace {
            normal,
            offset,
            normal_sq,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `‖a‖²`, cached at construction.
    pub fn normal_norm_squared(&self) -> f64 {
        self.normal_sq
    }

    /// `(⟨a, x⟩ − β)₊`.
    pub fn residual(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(self.residual_raw(x.as_slice()))
    }

    /// Signed value `⟨a, x⟩ − β`.
    pub(crate) fn slack_raw(&self, x: &[f64]) -> f64 {
        dot(self.normal.as_slice(), x) - self.offset
    }

    pub(crate) fn residual_raw(&self, x: &[f64]) -> f64 {
        self.slack_raw(x).max(0.0)
    }

    /// Euclidean distance from `x` to the half-space.
    pub(crate) fn distance_raw(&self, x: &[f64]) -> f64 {
        self.residual_raw(x) / self.normal_sq.sqrt()
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.residual(x)? <= tol)
    }

    /// Projects `x` onto the half-space in place.
    pub(crate) fn project_raw(&self, x: &mut [f64]) {
        let r = self.slack_raw(x);
        if r > 0.0 {
            let step = r / self.normal_sq;
            for (xi, ai) in x.iter_mut().zip(self.normal.as_slice()) {
                *xi -= step * ai;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyhedron {
    constraints: Vec<HalfSpace>,
}

impl Polyhedron {
    pub fn new(constraints: Vec<HalfSpace>) -> Result<Self> {
        let first = constraints.first().ok_or(Error::EmptyPolyhedron)?;
        let n = first.dim();
        for h in &constraints {
            h.normal().check_dim(n)?;
        }
        Ok(Polyhedron { constraints })
    }

    /// Builds `{z : A z ≤ b}` from the rows of `A`.
    pub fn from_rows(rows: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if rows.len() != offsets.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                got: offsets.len(),
            });
        }
        let constraints = rows
            .into_iter()
            .zip(offsets)
            .map(|(row, b)| HalfSpace::new(Vector::new(row)?, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(constraints)
    }

    pub fn dim(&self) -> usize {
        self.constraints[0].dim()
    }

    /// Number of constraints `m`.
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn constraints(&self) -> &[HalfSpace] {
        &self.constraints
    }

    /// The constraint with 1-based index `index`.
    pub fn constraint(&self, index: usize) -> Result<&HalfSpace> {
        if index == 0 || index > self.len() {
            return Err(Error::IndexOutOfRange {
                index,
                m: self.len(),
            });
        }
        Ok(&self.constraints[index - 1])
    }

    pub fn residuals(&self, x: &Vector) -> Result<Vec<f64>> {
        x.check_dim(self.dim())?;
        Ok(self
            .constraints
            .iter()
            .map(|h| h.residual_raw(x.as_slice()))
            .collect())
    }

    /// 1-based index of the largest residual and its value; ties go to the
    /// lowest index.
    pub fn max_residual(&self, x: &Vector) -> Result<(usize, f64)> {
        x.check_dim(self.dim())?;
        Ok(self.max_residual_raw(x.as_slice()))
    }

    pub(crate) fn max_residual_raw(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (1, self.constraints[0].residual_raw(x));
        for (i, h) in self.constraints.iter().enumerate().skip(1) {
            let r = h.residual_raw(x);
            if r > best.1 {
                best = (i + 1, r);
            }
        }
        best
    }

    /// `max_i d(x, C_i)`: a lower bound on `d(x, C)` that is exact when at
    /// most one constraint is violated.
    pub fn distance_lower_bound(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(self.distance_lower_bound_raw(x.as_slice()))
    }

    pub(crate) fn distance_lower_bound_raw(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|h| h.distance_raw(x))
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.max_residual(x)?.1 <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(entries: &[f64]) -> Vector {
        Vector::new(entries.to_vec()).unwrap()
    }

    fn h(normal: &[f64], offset: f64) -> HalfSpace {
        HalfSpace::new(v(normal), offset).unwrap()
    }

    #[test]
    fn residual_examples() {
        assert_eq!(h(&[1.0, 0.0], 1.0).residual(&v(&[3.0, 0.0])).unwrap(), 2.0);
        assert_eq!(h(&[1.0, 0.0], 1.0).residual(&v(&[0.0, 5.0])).unwrap(), 0.0);
        assert_eq!(h(&[1.0, 1.0], 0.0).residual(&v(&[1.0, 1.0])).unwrap(), 2.0);
    }

    #[test]
    fn residual_dimension_mismatch() {
        assert!(matches!(
            h(&[1.0, 0.0], 1.0).residual(&v(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn zero_normal_rejected() {
        assert!(matches!(
            HalfSpace::new(v(&[0.0, 0.0]), 1.0),
            Err(Error::ZeroNormal)
        ));
        assert!(matches!(
            Polyhedron::from_rows(vec![vec![1.0], vec![0.0]], vec![0.0, 1.0]),
            Err(Error::ZeroNormal)
        ));
        assert!(matches!(Polyhedron::new(vec![]), Err(Error::EmptyPolyhedron)));
    }

    // residuals (r1, r2, r3) realised with z_i ≤ 0 on x = (r1, r2, r3)
    fn orthant_at(residuals: [f64; 3]) -> (Polyhedron, Vector) {
        let p = Polyhedron::from_rows(
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            vec![0.0; 3],
        )
        .unwrap();
        (p, v(&residuals))
    }

    #[test]
    fn max_residual_examples() {
        let (p, x) = orthant_at([0.0, 3.0, 1.0]);
        assert_eq!(p.max_residual(&x).unwrap(), (2, 3.0));
        let (p, x) = orthant_at([0.0, 0.0, 0.0]);
        assert_eq!(p.max_residual(&x).unwrap(), (1, 0.0));
        let (p, x) = orthant_at([2.0, 2.0, 1.0]);
        assert_eq!(p.max_residual(&x).unwrap(), (1, 2.0));
    }

    #[test]
    fn constraint_indices_are_one_based() {
        let (p, _) = orthant_at([0.0; 3]);
        assert_eq!(p.constraint(1).unwrap().normal()[0], 1.0);
        assert!(p.constraint(0).is_err());
        assert!(p.constraint(4).is_err());
    }

    fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #[test]
        fn residual_zero_iff_member(a in coords(4), beta in -5.0..5.0f64, x in coords(4)) {
            prop_assume!(a.iter().any(|c| c.abs() > 1e-3));
            let hs = HalfSpace::new(Vector::new(a.clone()).unwrap(), beta).unwrap();
            let x = Vector::new(x).unwrap();
            let inner = dot(&a, x.as_slice());
            prop_assert_eq!(hs.residual(&x).unwrap() == 0.0, inner <= beta);
        }

        #[test]
        fn residual_convex_along_segments(
            a in coords(4), beta in -5.0..5.0f64, x in coords(4), y in coords(4), t in 0.0..=1.0f64,
        ) {
            prop_assume!(a.iter().any(|c| c.abs() > 1e-3));
            let hs = HalfSpace::new(Vector::new(a).unwrap(), beta).unwrap();
            let x = Vector::new(x).unwrap();
            let y = Vector::new(y).unwrap();
            let mid = y.lerp(&x, t).unwrap();
            let lhs = hs.residual(&mid).unwrap();
            let rhs = t * hs.residual(&x).unwrap() + (1.0 - t) * hs.residual(&y).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn max_residual_matches_brute_force(
            rows in proptest::collection::vec(coords(3), 1..12),
            x in coords(3),
        ) {
            prop_assume!(rows.iter().all(|r| r.iter().any(|c| c.abs() > 1e-3)));
            let m = rows.len();
            let p = Polyhedron::from_rows(rows, vec![0.5; m]).unwrap();
            let x = Vector::new(x).unwrap();
            let all = p.residuals(&x).unwrap();
            let (idx, val) = p.max_residual(&x).unwrap();
            let best = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(val, best);
            let first = all.iter().position(|&r| r == best).unwrap() + 1;
            prop_assert_eq!(idx, first);
        }
    }
}
