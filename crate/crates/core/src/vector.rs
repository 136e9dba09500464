//! Dense points of ℝⁿ.
//!
//! [`Vector`] only ever holds finite entries. Hot loops inside the crate work
//! on raw `f64` slices through the helpers at the bottom of this module and
//! re-wrap their output with [`Vector::from_computed`], which is where
//! overflow or NaN gets caught.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Wraps `entries`, rejecting empty input and non-finite values.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "Vector::zeros needs a positive dimension");
        Vector(vec![0.0; dim])
    }

    /// The `index`-th standard basis vector (0-based position).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = 1.0;
        v
    }

    pub(crate) fn from_computed(entries: Vec<f64>) -> Result<Self> {
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            })
        }
    }

    pub fn dot(&self, other: &Vector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        norm_sq(&self.0).sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        norm_sq(&self.0)
    }

    pub fn distance(&self, other: &Vector) -> Result<f64> {
        other.check_dim(self.dim())?;
        Ok(dist_sq(&self.0, &other.0).sqrt())
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        Vector::from_computed(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        other.check_dim(self.dim())?;
        Vector::from_computed(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, factor: f64) -> Result<Vector> {
        Vector::from_computed(self.0.iter().map(|a| a * factor).collect())
    }

    /// `self + t·(other − self)`.
    pub fn lerp(&self, other: &Vector, t: f64) -> Result<Vector> {
        other.check_dim(self.dim())?;
        Vector::from_computed(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(entries: Vec<f64>) -> Result<Self> {
        Vector::new(entries)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, index: usize) -> &f64 {
        &self.0[index]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

/// Inner product; panics in debug builds on length mismatch.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    dot(x, x)
}

pub(crate) fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `y += t·x`
pub(crate) fn axpy(t: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += t * xi;
    }
}

pub(crate) fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
