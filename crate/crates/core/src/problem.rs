//! Variational inequality problems `VI(F, C)` over a polyhedron `C`.
//!
//! Problem files are JSON documents
//! `{"n": .., "m": .., "A": [[..], ..], "b": [..], "a": [..]}` describing the
//! best-approximation instance `F = id − a`, `C = {z : A z ≤ b}`. Numbers are
//! written with 17 significant digits so a write/read cycle is bit-exact.

use std::fmt::{self, Write as _};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::sets::Polyhedron;
use crate::vector::{dist_sq, dot, Vector};

/// A Lipschitz continuous, strongly monotone map `F: ℝⁿ → ℝⁿ`.
pub trait MonotoneMap: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Writes `F(x)` into `out`.
    fn apply(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Clone, Debug)]
pub enum Field {
    /// `F(x) = x − a`: 1-Lipschitz and 1-strongly monotone.
    Anchor(Vector),
    General {
        map: Arc<dyn MonotoneMap>,
        lipschitz: f64,
        strong_monotonicity: f64,
    },
}

impl Field {
    pub fn dim(&self) -> usize {
        match self {
            Field::Anchor(a) => a.dim(),
            Field::General { map, .. } => map.dim(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Field::Anchor(_) => 1.0,
            Field::General { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn strong_monotonicity(&self) -> f64 {
        match self {
            Field::Anchor(_) => 1.0,
            Field::General {
                strong_monotonicity,
                ..
            } => *strong_monotonicity,
        }
    }

    pub fn eval(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim())?;
        let mut out = vec![0.0; x.dim()];
        self.eval_raw(x.as_slice(), &mut out);
        Vector::from_computed(out)
    }

    pub(crate) fn eval_raw(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Field::Anchor(a) => {
                for ((o, xi), ai) in out.iter_mut().zip(x).zip(a.as_slice()) {
                    *o = xi - ai;
                }
            }
            Field::General { map, .. } => map.apply(x, out),
        }
    }

    /// Samples `pairs` random point pairs in `[-scale, scale]ⁿ` and counts
    /// violations of the declared Lipschitz and strong monotonicity
    /// constants.
    pub fn check_constants(&self, pairs: usize, scale: f64, seed: u64) -> ConstantCheck {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, alpha) = (self.lipschitz(), self.strong_monotonicity());
        let mut check = ConstantCheck::default();
        let (mut fx, mut fy) = (vec![0.0; n], vec![0.0; n]);
        for _ in 0..pairs {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-scale..scale)).collect();
            self.eval_raw(&x, &mut fx);
            self.eval_raw(&y, &mut fy);
            let d2 = dist_sq(&x, &y);
            let diff: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
            let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            if dot(&diff, &diff) > l * l * d2 * (1.0 + 1e-10) + 1e-12 {
                check.lipschitz_violations += 1;
            }
            if dot(&diff, &dx) < alpha * d2 * (1.0 - 1e-10) - 1e-12 {
                check.monotonicity_violations += 1;
            }
        }
        check
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConstantCheck {
    pub lipschitz_violations: usize,
    pub monotonicity_violations: usize,
}

impl ConstantCheck {
    pub fn is_clean(&self) -> bool {
        self.lipschitz_violations == 0 && self.monotonicity_violations == 0
    }
}

#[derive(Clone, Debug)]
pub struct ViProblem {
    field: Field,
    constraints: Polyhedron,
}

impl ViProblem {
    /// `min ½‖z − anchor‖²` over `constraints`, i.e. `F = id − anchor`.
    pub fn best_approximation(anchor: Vector, constraints: Polyhedron) -> Result<Self> {
        anchor.check_dim(constraints.dim())?;
        Ok(ViProblem {
            field: Field::Anchor(anchor),
            constraints,
        })
    }

    /// A general problem with user-declared constants. The constants are
    /// spot-checked on random pairs; violations are logged, not rejected.
    pub fn general(
        map: Arc<dyn MonotoneMap>,
        lipschitz: f64,
        strong_monotonicity: f64,
        constraints: Polyhedron,
    ) -> Result<Self> {
        if !(lipschitz > 0.0 && strong_monotonicity > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "constants must be positive (L = {lipschitz}, alpha = {strong_monotonicity})"
            )));
        }
        if map.dim() != constraints.dim() {
            return Err(Error::DimensionMismatch {
                expected: constraints.dim(),
                got: map.dim(),
            });
        }
        let field = Field::General {
            map,
            lipschitz,
            strong_monotonicity,
        };
        let check = field.check_constants(200, 10.0, 0);
        if !check.is_clean() {
            log::warn!(
                "declared constants look wrong: {} Lipschitz and {} strong monotonicity violations in 200 sampled pairs",
                check.lipschitz_violations,
                check.monotonicity_violations
            );
        }
        Ok(ViProblem { field, constraints })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn constraints(&self) -> &Polyhedron {
        &self.constraints
    }

    pub fn dim(&self) -> usize {
        self.constraints.dim()
    }

    /// The anchor `a` of a best-approximation problem.
    pub fn anchor(&self) -> Option<&Vector> {
        match &self.field {
            Field::Anchor(a) => Some(a),
            Field::General { .. } => None,
        }
    }

    /// Hash of the exact bit patterns of `A`, `b` and `a`.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        for h in self.constraints.constraints() {
            for v in h.normal().iter() {
                v.to_bits().hash(&mut hasher);
            }
            h.offset().to_bits().hash(&mut hasher);
        }
        if let Some(a) = self.anchor() {
            for v in a.iter() {
                v.to_bits().hash(&mut hasher);
            }
        }
        hasher.finish()
    }

    /// Serializes a best-approximation problem to its JSON document.
    pub fn to_json(&self) -> Result<String> {
        let anchor = self.anchor().ok_or_else(|| {
            Error::InvalidConfig("only F = id − a problems can be serialized".into())
        })?;
        let mut out = String::new();
        let _ = write!(
            out,
            "{{\n  \"n\": {},\n  \"m\": {},\n  \"A\": [",
            self.dim(),
            self.constraints.len()
        );
        for (i, h) in self.constraints.constraints().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("\n    ");
            write_array(&mut out, h.normal().as_slice());
        }
        out.push_str("\n  ],\n  \"b\": ");
        let offsets: Vec<f64> = self.constraints.constraints().iter().map(|h| h.offset()).collect();
        write_array(&mut out, &offsets);
        out.push_str(",\n  \"a\": ");
        write_array(&mut out, anchor.as_slice());
        out.push_str("\n}\n");
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDocument = serde_json::from_str(text)?;
        let rows = match doc.matrix {
            Matrix::Rows(rows) => rows,
            Matrix::Flat(flat) => {
                if flat.len() != doc.n * doc.m {
                    return Err(Error::DimensionMismatch {
                        expected: doc.n * doc.m,
                        got: flat.len(),
                    });
                }
                flat.chunks(doc.n.max(1)).map(<[f64]>::to_vec).collect()
            }
        };
        if rows.len() != doc.m {
            return Err(Error::DimensionMismatch {
                expected: doc.m,
                got: rows.len(),
            });
        }
        for row in &rows {
            if row.len() != doc.n {
                return Err(Error::DimensionMismatch {
                    expected: doc.n,
                    got: row.len(),
                });
            }
        }
        let constraints = Polyhedron::from_rows(rows, doc.b)?;
        Self::best_approximation(Vector::new(doc.a)?, constraints)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// 17 significant digits: enough to round-trip any finite double.
pub(crate) fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

fn write_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format_f64(*v));
    }
    out.push(']');
}

#[derive(Deserialize)]
struct ProblemDocument {
    n: usize,
    m: usize,
    #[serde(rename = "A")]
    matrix: Matrix,
    b: Vec<f64>,
    a: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Matrix {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}
