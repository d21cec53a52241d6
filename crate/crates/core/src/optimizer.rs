//! Eigenvalue assignment for the diagonal collapse operator.
//!
//! Minimize `λ00 + λ01 + λ10 + λ11` subject to `λ ≥ 0` and
//! `|λ_s − λ_t| ≥ D(s, t)` for every pair of dyad states.
//!
//! The gap constraints are disjunctive, so the feasible set is a union of
//! polyhedra, one per ordering of the eigenvalues. Within an ordering the
//! constraints are linear and the componentwise-smallest point is obtained by
//! placing values in order, each the smallest value not below its predecessor
//! that respects every gap to the values already placed (a longest path). Any
//! minimizer lies in some ordering's region and must equal that region's
//! smallest point, so collecting these points over all 24 orderings and
//! keeping those of minimal sum yields the complete minimizer set.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qshape::DistanceTable;

/// Absolute tolerance for constraint satisfaction and sum comparisons.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("no feasible eigenvalue assignment exists for this table")]
    InfeasibleTable,
    #[error("grid oracle needs granularity > 0 and bound >= 3 x max entry (got g={granularity}, bound={bound})")]
    InvalidGrid { granularity: f64, bound: f64 },
}

/// Eigenvalues `(λ00, λ01, λ10, λ11)` in lexicographic state order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", from = "[f64; 4]")]
pub struct EigenAssignment(pub [f64; 4]);

impl EigenAssignment {
    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.partial_cmp(b).unwrap_or(Ordering::Equal) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| (a - b).abs() <= TOL)
    }
}

impl From<EigenAssignment> for [f64; 4] {
    fn from(e: EigenAssignment) -> Self {
        e.0
    }
}

impl From<[f64; 4]> for EigenAssignment {
    fn from(v: [f64; 4]) -> Self {
        EigenAssignment(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult {
    /// Sorted lexicographically.
    pub minimizers: Vec<EigenAssignment>,
    pub optimal_sum: f64,
    /// `pairwise_rate_sum` of each minimizer, in the same order.
    pub pairwise_rate_sum: Vec<f64>,
}

impl OptimizationResult {
    fn from_minimizers(mut minimizers: Vec<EigenAssignment>) -> Result<Self, OptimizerError> {
        minimizers.sort_by(EigenAssignment::lex_cmp);
        minimizers.dedup_by(|a, b| a.approx_eq(b));
        let optimal_sum = minimizers
            .first()
            .map(EigenAssignment::sum)
            .ok_or(OptimizerError::InfeasibleTable)?;
        let pairwise_rate_sum = minimizers.iter().map(pairwise_rate_sum).collect();
        Ok(OptimizationResult {
            minimizers,
            optimal_sum,
            pairwise_rate_sum,
        })
    }

    /// The default pick among equivalent minimizers: the lexicographically smallest.
    pub fn default_pick(&self) -> EigenAssignment {
        self.minimizers[0]
    }
}

pub fn feasible(assignment: &EigenAssignment, table: &DistanceTable) -> bool {
    let v = assignment.0;
    if v.iter().any(|&x| !(x >= -TOL)) {
        return false;
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            if (v[i] - v[j]).abs() < table.get(i, j) - TOL {
                return false;
            }
        }
    }
    true
}

/// Sum of `|λ_s − λ_t|` over the six unordered pairs of states.
pub fn pairwise_rate_sum(assignment: &EigenAssignment) -> f64 {
    let v = assignment.0;
    let mut total = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            total += (v[i] - v[j]).abs();
        }
    }
    total
}

fn permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    p.iter().for_each(|&i| seen[i] = true);
                    if seen.iter().all(|&s| s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Smallest assignment whose values are non-decreasing along `order`.
fn tightest_along(order: &[usize; 4], table: &DistanceTable) -> EigenAssignment {
    let mut values = [0.0; 4];
    for (k, &s) in order.iter().enumerate() {
        let placed = &order[..k];
        values[s] = placed
            .iter()
            .map(|&t| values[t] + table.get(s, t))
            .fold(0.0, f64::max);
    }
    EigenAssignment(values)
}

pub fn solve(table: &DistanceTable) -> Result<OptimizationResult, OptimizerError> {
    let candidates: Vec<EigenAssignment> = permutations()
        .iter()
        .map(|order| tightest_along(order, table))
        .filter(|c| feasible(c, table))
        .collect();
    let best = candidates
        .iter()
        .map(EigenAssignment::sum)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(OptimizerError::InfeasibleTable);
    }
    OptimizationResult::from_minimizers(
        candidates
            .into_iter()
            .filter(|c| c.sum() <= best + TOL)
            .collect(),
    )
}

/// Exhaustive search over `{0, g, 2g, ..., bound}^4` restricted to points with
/// at least one zero coordinate. Returns every feasible lattice point of
/// minimal sum.
pub fn grid_oracle(
    table: &DistanceTable,
    granularity: f64,
    bound: f64,
) -> Result<OptimizationResult, OptimizerError> {
    let points = feasible_lattice(table, granularity, bound)?;
    let best = points
        .iter()
        .map(EigenAssignment::sum)
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(OptimizerError::InfeasibleTable);
    }
    OptimizationResult::from_minimizers(
        points.into_iter().filter(|p| p.sum() <= best + TOL).collect(),
    )
}

/// All zero-anchored feasible points of the lattice `{0, g, ..., bound}^4`.
pub fn feasible_lattice(
    table: &DistanceTable,
    granularity: f64,
    bound: f64,
) -> Result<Vec<EigenAssignment>, OptimizerError> {
    if !(granularity > 0.0) || !(bound >= 3.0 * table.max_entry()) || !bound.is_finite() {
        return Err(OptimizerError::InvalidGrid { granularity, bound });
    }
    let steps = (bound / granularity + TOL).floor() as usize;
    let n = steps + 1;
    let total = n.pow(4);
    let points = (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let idx = [code / (n * n * n), (code / (n * n)) % n, (code / n) % n, code % n];
            if !idx.contains(&0) {
                return None;
            }
            let a = EigenAssignment(idx.map(|i| i as f64 * granularity));
            feasible(&a, table).then_some(a)
        })
        .collect();
    Ok(points)
}
