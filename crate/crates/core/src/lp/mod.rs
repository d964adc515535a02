//! Dense linear programming.
//!
//! [`solve_lp`] is a two-phase revised simplex method with an explicit basis
//! inverse. It returns primal values together with row multipliers, which the
//! two-stage machinery uses as second-stage dual vectors.
//!
//! [`RhsFamily`] wraps the solver for families of LPs that share the
//! constraint matrix and the cost vector and differ only in the right-hand
//! side. Every basis that is optimal for one member is dual feasible for all
//! of them, so a cached basis whose primal values stay nonnegative for a new
//! right-hand side is optimal without pivoting. Otherwise the dual simplex
//! method restarts from a cached basis, and only a failure there falls back
//! to a cold solve.

mod family;
mod simplex;

pub use family::{FamilyFailure, FamilyStats, RhsFamily, RhsSolution};
pub use simplex::solve_lp;

use thiserror::Error;

/// Primal feasibility tolerance, scaled by `1 + ‖rhs‖∞`.
pub const FEAS_TOL: f64 = 1e-8;
/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-9;
/// Relative duality-gap tolerance.
pub const GAP_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("simplex exceeded {0} pivots")]
    NumericalFailure(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// `min c·x` subject to `A_eq x = b_eq`, `A_le x ≤ b_le` and per-variable
/// lower bounds (`None` marks a free variable).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub le_matrix: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
    pub lower_bounds: Vec<Option<f64>>,
}

impl LinearProgram {
    /// A program over `objective.len()` nonnegative variables with no rows.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_matrix: Vec::new(),
            eq_rhs: Vec::new(),
            le_matrix: Vec::new(),
            le_rhs: Vec::new(),
            lower_bounds: vec![Some(0.0); n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.le_matrix.push(row);
        self.le_rhs.push(rhs);
        self
    }

    /// Adds `row·x ≥ rhs` as the negated `≤` row.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs)
    }

    pub fn set_lower_bound(&mut self, var: usize, bound: Option<f64>) -> &mut Self {
        self.lower_bounds[var] = bound;
        self
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.lower_bounds.len() != n {
            return Err(LpError::DimensionMismatch(format!(
                "{} lower bounds for {} variables",
                self.lower_bounds.len(),
                n
            )));
        }
        for (name, rows, rhs) in [
            ("equality", &self.eq_matrix, &self.eq_rhs),
            ("inequality", &self.le_matrix, &self.le_rhs),
        ] {
            if rows.len() != rhs.len() {
                return Err(LpError::DimensionMismatch(format!(
                    "{} {name} rows but {} right-hand sides",
                    rows.len(),
                    rhs.len()
                )));
            }
            if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(LpError::DimensionMismatch(format!(
                    "{name} row {i} has {} columns, expected {n}",
                    row.len()
                )));
            }
            if rows
                .iter()
                .flatten()
                .chain(rhs.iter())
                .any(|v| !v.is_finite())
            {
                return Err(LpError::NonFinite("constraints"));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if self.lower_bounds.iter().flatten().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("lower bounds"));
        }
        Ok(())
    }

    /// Largest absolute constraint violation of `x`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (row, &b) in self.eq_matrix.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(row, x) - b).abs());
        }
        for (row, &b) in self.le_matrix.iter().zip(&self.le_rhs) {
            worst = worst.max(dot(row, x) - b);
        }
        for (xj, lb) in x.iter().zip(&self.lower_bounds) {
            if let Some(l) = lb {
                worst = worst.max(l - xj);
            }
        }
        worst
    }

    /// `‖(b_eq, b_le)‖∞`, used to scale feasibility tolerances.
    pub fn rhs_norm(&self) -> f64 {
        self.eq_rhs
            .iter()
            .chain(&self.le_rhs)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// Multipliers of the equality rows.
    pub duals_eq: Vec<f64>,
    /// Multipliers of the `≤` rows; nonpositive at an optimum.
    pub duals_ineq: Vec<f64>,
    pub objective: f64,
    /// Basic variables of the final basis, when every basic variable is an
    /// original column (no slacks, splits or artificials). Only reported for
    /// equality-only programs over nonnegative variables.
    pub basic_columns: Option<Vec<usize>>,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `b·y + Σ l_j d_j` where `d = c − Aᵀy` are the reduced costs of
    /// lower-bounded variables.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut value = dot(&lp.eq_rhs, &self.duals_eq) + dot(&lp.le_rhs, &self.duals_ineq);
        for j in 0..lp.n_vars() {
            if let Some(l) = lp.lower_bounds[j] {
                if l != 0.0 {
                    value += l * self.reduced_cost(lp, j);
                }
            }
        }
        value
    }

    pub fn reduced_cost(&self, lp: &LinearProgram, var: usize) -> f64 {
        let mut d = lp.objective[var];
        for (row, y) in lp.eq_matrix.iter().zip(&self.duals_eq) {
            d -= row[var] * y;
        }
        for (row, y) in lp.le_matrix.iter().zip(&self.duals_ineq) {
            d -= row[var] * y;
        }
        d
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests;
