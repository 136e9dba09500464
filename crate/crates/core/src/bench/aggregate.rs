use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::trace::RunTrace;

/// Ribbon concentrations, in percent, drawn around the median.
pub const DEFAULT_LEVELS: [u32; 4] = [20, 40, 60, 80];

/// Percentile `p ∈ [0, 100]` of sorted data, interpolating linearly between
/// the order statistics at positions `⌊h⌋` and `⌈h⌉`, `h = (N − 1)·p/100`.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let frac = h - lo as f64;
    if lo == hi || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RibbonRow {
    pub method: String,
    pub k: usize,
    pub median: f64,
    /// `(p(50 − L/2), p(50 + L/2))` per level, in the table's level order.
    pub bands: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RibbonTable {
    pub levels: Vec<u32>,
    pub rows: Vec<RibbonRow>,
}

impl RibbonTable {
    /// Percentiles appearing as CSV columns, ascending.
    pub fn percentiles(&self) -> Vec<f64> {
        let mut ps: Vec<f64> = self
            .levels
            .iter()
            .flat_map(|&l| [50.0 - l as f64 / 2.0, 50.0 + l as f64 / 2.0])
            .collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        ps
    }

    pub fn header(&self) -> String {
        let mut header = String::from("method,k,median");
        for p in self.percentiles() {
            let _ = write!(header, ",p{p}");
        }
        header
    }

    pub fn rows_for<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a RibbonRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn final_median(&self, method: &str) -> Option<f64> {
        self.rows_for(method).last().map(|r| r.median)
    }

    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.method) && !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let ps = self.percentiles();
        let mut out = self.header();
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{},{}", row.method, row.k, row.median);
            for p in &ps {
                let _ = write!(out, ",{}", self.lookup(row, *p));
            }
            out.push('\n');
        }
        out
    }

    fn lookup(&self, row: &RibbonRow, p: f64) -> f64 {
        for (level, (lo, hi)) in self.levels.iter().zip(&row.bands) {
            let half = *level as f64 / 2.0;
            if 50.0 - half == p {
                return *lo;
            }
            if 50.0 + half == p {
                return *hi;
            }
        }
        unreachable!("percentile {p} not produced by any level")
    }
}

/// Median and central ribbons of the relative log error per method and `k`.
///
/// Methods appear in order of first occurrence; every trace of a method
/// must share the same `k` grid and carry filled errors.
pub fn aggregate(traces: &[RunTrace], levels: &[u32]) -> Result<RibbonTable> {
    if let Some(&l) = levels.iter().find(|&&l| l > 100) {
        return Err(Error::InvalidConfig(format!("ribbon level {l} above 100")));
    }
    let mut methods: Vec<&str> = Vec::new();
    for t in traces {
        if !methods.contains(&t.method.as_str()) {
            methods.push(&t.method);
        }
    }

    let mut rows = Vec::new();
    for method in methods {
        let group: Vec<&RunTrace> = traces.iter().filter(|t| t.method == method).collect();
        let grid = group[0].ks();
        let misaligned = || Error::MisalignedGrids {
            method: method.to_string(),
        };
        if group.iter().any(|t| t.ks() != grid) {
            return Err(misaligned());
        }
        for (j, &k) in grid.iter().enumerate() {
            let mut values = group
                .iter()
                .map(|t| t.records[j].err_log10.ok_or_else(misaligned))
                .collect::<Result<Vec<f64>>>()?;
            values.sort_by(f64::total_cmp);
            let bands = levels
                .iter()
                .map(|&l| {
                    let half = l as f64 / 2.0;
                    (percentile(&values, 50.0 - half), percentile(&values, 50.0 + half))
                })
                .collect();
            rows.push(RibbonRow {
                method: method.to_string(),
                k,
                median: percentile(&values, 50.0),
                bands,
            });
        }
    }
    Ok(RibbonTable {
        levels: levels.to_vec(),
        rows,
    })
}
