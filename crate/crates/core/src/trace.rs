//! Per-run iterate records and their CSV export.

use std::fmt::Write as _;

use crate::vector::Vector;

/// Smallest error ratio reported before taking `log10`, so an exact hit
/// on the solution yields a large negative number instead of `-inf`.
pub const ERROR_FLOOR: f64 = f64::MIN_POSITIVE;

pub const TRACE_CSV_HEADER: &str = "k,err_log10,dist_C,op_residual";

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub x: Vector,
    /// `‖T_k x^k − x^k‖` for the operator used in step `k`.
    pub operator_residual: f64,
    pub max_residual: f64,
    /// `max_i d(x^k, C_i)`, a lower bound on `d(x^k, C)`.
    pub distance_estimate: f64,
    /// `log10(‖x^k − x*‖ / ‖x^0 − x*‖)`, or the absolute `log10‖x^k − x*‖`
    /// when the run starts at the solution.
    pub err_log10: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub seed: Option<u64>,
    pub method: String,
    /// Sorted by `k`: every multiple of the stride plus the final iterate.
    pub records: Vec<TraceRecord>,
    /// Set when `‖x^0 − x*‖ = 0` and errors are absolute.
    pub absolute_error: bool,
}

impl RunTrace {
    pub fn first(&self) -> &TraceRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("traces always hold x^0")
    }

    pub fn ks(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.k).collect()
    }

    /// Fills `err_log10` against the reference solution.
    pub fn fill_errors(&mut self, solution: &Vector) {
        let initial = self.records[0].x.distance(solution).unwrap_or(f64::NAN);
        self.absolute_error = initial == 0.0;
        let scale = if self.absolute_error { 1.0 } else { initial };
        for r in &mut self.records {
            let err = r.x.distance(solution).unwrap_or(f64::NAN);
            r.err_log10 = Some((err / scale).max(ERROR_FLOOR).log10());
        }
    }

    pub fn final_error(&self) -> Option<f64> {
        self.last().err_log10
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.records.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let err = r.err_log10.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.k, err, r.distance_estimate, r.operator_residual
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(k: usize, x: f64) -> TraceRecord {
        TraceRecord {
            k,
            x: Vector::new(vec![x, 0.0]).unwrap(),
            operator_residual: 0.5,
            max_residual: 0.0,
            distance_estimate: 0.25,
            err_log10: None,
        }
    }

    #[test]
    fn relative_errors_start_at_zero() {
        let mut t = RunTrace {
            seed: Some(3),
            method: "cyclic".into(),
            records: vec![record(0, 10.0), record(50, 1.0), record(100, 0.0)],
            absolute_error: false,
        };
        t.fill_errors(&Vector::zeros(2));
        assert_eq!(t.records[0].err_log10, Some(0.0));
        assert_eq!(t.records[1].err_log10, Some(-1.0));
        assert!(t.final_error().unwrap().is_finite());
        assert!(t.final_error().unwrap() < -300.0);
        assert!(!t.absolute_error);
        let csv = t.to_csv();
        assert!(csv.starts_with("k,err_log10,dist_C,op_residual\n0,0,0.25,0.5\n50,-1,"));
    }

    #[test]
    fn start_at_solution_switches_to_absolute_error() {
        let mut t = RunTrace {
            seed: None,
            method: "m".into(),
            records: vec![record(0, 0.0), record(1, 1e-3)],
            absolute_error: false,
        };
        t.fill_errors(&Vector::zeros(2));
        assert!(t.absolute_error);
        assert!(t.records[0].err_log10.unwrap().is_finite());
        assert!((t.records[1].err_log10.unwrap() + 3.0).abs() < 1e-12);
    }
}
