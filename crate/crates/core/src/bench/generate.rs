use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::problem::ViProblem;
use crate::sets::{HalfSpace, Polyhedron};
use crate::vector::{norm_sq, Vector};

/// Slack range, in distance units, between the interior anchor and each
/// bounding hyperplane.
pub const SLACK_RANGE: (f64, f64) = (0.1, 1.0);

/// Distance from the interior anchor to the target `a`.
pub const TARGET_RADIUS: f64 = 5.0;

/// A random best-approximation instance with `int C ≠ ∅`.
///
/// Rows `aᵢ` and an interior point `z₀` are standard normal; offsets are
/// `bᵢ = ⟨aᵢ, z₀⟩ + uᵢ‖aᵢ‖` with `uᵢ` uniform on [`SLACK_RANGE`], so the
/// ball of radius 0.1 around `z₀` lies in `C`. The target is
/// `a = z₀ + TARGET_RADIUS·v` for a uniformly random unit vector `v`.
pub fn generate_problem(seed: u64, n: usize, m: usize) -> Result<ViProblem> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig(format!(
            "problem dimensions must be positive (n = {n}, m = {m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchor: Vec<f64> = normal_vec(&mut rng, n);
    let slack = Uniform::new(SLACK_RANGE.0, SLACK_RANGE.1).expect("valid range");

    let mut constraints = Vec::with_capacity(m);
    while constraints.len() < m {
        let row = normal_vec(&mut rng, n);
        let len = norm_sq(&row).sqrt();
        if len < 1e-8 {
            continue;
        }
        let offset = crate::vector::dot(&row, &anchor) + slack.sample(&mut rng) * len;
        constraints.push(HalfSpace::new(Vector::new(row)?, offset)?);
    }

    let direction = loop {
        let v = normal_vec(&mut rng, n);
        let len = norm_sq(&v).sqrt();
        if len > 1e-8 {
            break v.into_iter().map(|c| c / len).collect::<Vec<_>>();
        }
    };
    let target: Vec<f64> = anchor
        .iter()
        .zip(&direction)
        .map(|(z, v)| z + TARGET_RADIUS * v)
        .collect();

    ViProblem::best_approximation(Vector::new(target)?, Polyhedron::new(constraints)?)
}

/// The interior point `z₀` used by [`generate_problem`] for `seed`.
pub fn interior_point(seed: u64, n: usize) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Vector::new(normal_vec(&mut rng, n)).expect("normal samples are finite")
}

fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_problem() {
        let a = generate_problem(42, 20, 100).unwrap();
        let b = generate_problem(42, 20, 100).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = generate_problem(43, 20, 100).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn interior_point_is_strictly_feasible() {
        for seed in 0..20 {
            let p = generate_problem(seed, 20, 100).unwrap();
            let z0 = interior_point(seed, 20);
            let residuals = p.constraints().residuals(&z0).unwrap();
            assert!(residuals.iter().all(|&r| r == 0.0));
            for h in p.constraints().constraints() {
                let gap = (h.offset() - h.normal().dot(&z0).unwrap()) / h.normal().norm();
                assert!(gap >= SLACK_RANGE.0 - 1e-12);
            }
        }
    }

    #[test]
    fn rejects_empty_dimensions() {
        assert!(generate_problem(0, 0, 3).is_err());
        assert!(generate_problem(0, 3, 0).is_err());
    }
}
