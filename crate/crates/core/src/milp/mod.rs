//! Pure integer linear programs and an exact solver for them.
//!
//! Programs are always maximised. The LP relaxation is solved by a bounded
//! dual simplex method (see [`simplex`]) and integrality is enforced by
//! best-bound branch-and-bound (see [`branch`]). Both are single-threaded and
//! deterministic: identical inputs give identical incumbents and node counts.
//!
//! Fixed tolerances:
//!
//! | quantity            | tolerance |
//! |---------------------|-----------|
//! | LP primal feasibility | `1e-7`  |
//! | integrality         | `1e-6`    |
//! | pruning gap         | `1e-9`    |

mod branch;
mod lp_format;
mod simplex;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use branch::{solve_milp, solve_milp_with, Budget, MilpLimits, MilpResult, MilpStatus, NoBudget};
pub use lp_format::{export_lp_text, parse_lp_text};
pub use simplex::{solve_lp, LpSolution, LpStatus};

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const INTEGRALITY_TOL: f64 = 1e-6;
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum VarKind {
    Integer,
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    /// `f64::INFINITY` when unbounded above.
    pub upper: f64,
    pub kind: VarKind,
    pub objective: f64,
}

/// `lower ≤ Σ coefficients · x ≤ upper`; either side may be infinite.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<(usize, f64)>,
    pub lower: f64,
    pub upper: f64,
}

/// A maximisation problem over bounded variables and two-sided rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntegerProgram {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

/// Tightened bounds for one variable, used by branching and by callers who
/// want to solve a restricted relaxation.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BoundOverride {
    pub var: usize,
    pub lower: f64,
    pub upper: f64,
}

impl IntegerProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: String, lower: f64, upper: f64, kind: VarKind, objective: f64) -> usize {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        self.variables.push(Variable { name, lower, upper, kind, objective });
        self.variables.len() - 1
    }

    /// Adds a row, merging duplicate variable entries and dropping zeros.
    pub fn add_constraint(&mut self, mut coefficients: Vec<(usize, f64)>, lower: f64, upper: f64) -> usize {
        coefficients.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coefficients.len());
        for (j, v) in coefficients {
            match merged.last_mut() {
                Some(last) if last.0 == j => last.1 += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        self.constraints.push(Constraint { coefficients: merged, lower, upper });
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.variables.iter().zip(values).map(|(v, x)| v.objective * x).sum()
    }

    pub fn row_activity(&self, row: usize, values: &[f64]) -> f64 {
        self.constraints[row].coefficients.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Structural checks: indices in range, binaries in `[0, 1]`, ordered
    /// bounds, finite lower bounds.
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |msg: String| Err(crate::Error::Solver(msg));
        for (j, v) in self.variables.iter().enumerate() {
            if !v.lower.is_finite() {
                return bad(format!("variable {} has no finite lower bound", v.name));
            }
            if v.lower > v.upper {
                return bad(format!("variable {j} has empty bounds"));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return bad(format!("binary variable {j} has bounds outside [0, 1]"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.iter().any(|&(j, _)| j >= self.variables.len()) {
                return bad(format!("row {i} references an unknown variable"));
            }
            if c.lower > c.upper {
                return bad(format!("row {i} has empty bounds"));
            }
        }
        Ok(())
    }

    /// Indices of rows and bounds that `values` violates by more than `tol`.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (j, v) in self.variables.iter().enumerate() {
            let x = values[j];
            if x < v.lower - tol || x > v.upper + tol {
                out.push(format!("bound of {} ({x})", v.name));
            }
            if v.kind != VarKind::Continuous && libm::fabs(x - libm::round(x)) > tol {
                out.push(format!("integrality of {} ({x})", v.name));
            }
        }
        for i in 0..self.constraints.len() {
            let a = self.row_activity(i, values);
            let c = &self.constraints[i];
            if a < c.lower - tol || a > c.upper + tol {
                out.push(format!("row {i} ({} <= {a} <= {})", c.lower, c.upper));
            }
        }
        out
    }
}
