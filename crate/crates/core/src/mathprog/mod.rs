//! Small linear and mixed-integer programming engine.
//!
//! The masters built by column generation and the leader problem are a few
//! hundred rows by a few thousand columns at most, so a dense-inverse bounded
//! revised simplex is enough. Branch-and-bound on top of it handles the
//! integer versions.

mod branch;
mod simplex;

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

pub use branch::{solve_milp, DEFAULT_MILP_GAP};
pub use simplex::solve_lp;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-8;
/// Reduced cost threshold used for optimality, relative to the cost scale.
pub const OPT_TOL: f64 = 1e-9;
/// Tolerance used when deciding whether an integer column is integral.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sense::Le => write!(f, "<="),
            Sense::Eq => write!(f, "="),
            Sense::Ge => write!(f, ">="),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub integer: bool,
    /// Fractional columns with higher priority are branched on first.
    pub priority: i32,
    /// Sparse entries `(row, coefficient)`.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization problem `min c x  s.t.  rows, lower <= x <= upper`.
///
/// Coefficients are stored column-wise so that column generation can append
/// columns to an existing model cheaply.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    columns: Vec<Column>,
    rows: Vec<Row>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("simplex stalled after {iterations} iterations")]
    Numerical { iterations: usize },
    #[error("branch-and-bound node limit reached ({nodes} nodes)")]
    NodeLimit { nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `duals` follow the convention `d_j = c_j - sum_i y_i a_ij`,
/// so duals of `<=` rows are non-positive and duals of `>=` rows
/// non-negative in a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
    /// Branch-and-bound nodes explored; zero for a pure LP solve.
    pub nodes: usize,
    /// Best bound proven by branch-and-bound (equal to `objective` for LPs).
    pub bound: f64,
}

impl LpSolution {
    pub(crate) fn with_status(status: LpStatus, n_cols: usize, n_rows: usize) -> Self {
        LpSolution {
            status,
            objective: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            primal: vec![0.0; n_cols],
            duals: vec![0.0; n_rows],
            reduced_costs: vec![0.0; n_cols],
            iterations: 0,
            nodes: 0,
            bound: f64::INFINITY,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, col: ColId) -> f64 {
        self.primal[col.0]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.0]
    }
}

impl LpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn column(&self, col: ColId) -> &Column {
        &self.columns[col.0]
    }

    pub fn row(&self, row: RowId) -> &Row {
        &self.rows[row.0]
    }

    pub fn add_row(&mut self, name: impl Into<String>, sense: Sense, rhs: f64) -> RowId {
        self.rows.push(Row {
            name: name.into(),
            sense,
            rhs,
        });
        RowId(self.rows.len() - 1)
    }

    /// Adds a column with its coefficients in existing rows.
    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
        integer: bool,
        entries: &[(RowId, f64)],
    ) -> ColId {
        let mut entries: Vec<(usize, f64)> = entries
            .iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(r, v)| (r.0, *v))
            .collect();
        entries.sort_by_key(|(r, _)| *r);
        self.columns.push(Column {
            name: name.into(),
            lower,
            upper,
            cost,
            integer,
            priority: 0,
            entries,
        });
        ColId(self.columns.len() - 1)
    }

    /// Convenience for models written row by row: appends a row whose
    /// coefficients refer to already existing columns.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coefs: &[(ColId, f64)],
        sense: Sense,
        rhs: f64,
    ) -> RowId {
        let row = self.add_row(name, sense, rhs);
        for &(col, v) in coefs {
            if v == 0.0 {
                continue;
            }
            let entries = &mut self.columns[col.0].entries;
            match entries.iter_mut().find(|(r, _)| *r == row.0) {
                Some(e) => e.1 += v,
                None => entries.push((row.0, v)),
            }
        }
        row
    }

    /// Adds `value` to the coefficient of `col` in `row`.
    pub fn add_coefficient(&mut self, col: ColId, row: RowId, value: f64) {
        if value == 0.0 {
            return;
        }
        let entries = &mut self.columns[col.0].entries;
        match entries.binary_search_by_key(&row.0, |(r, _)| *r) {
            Ok(k) => entries[k].1 += value,
            Err(k) => entries.insert(k, (row.0, value)),
        }
    }

    pub fn set_bounds(&mut self, col: ColId, lower: f64, upper: f64) {
        let c = &mut self.columns[col.0];
        c.lower = lower;
        c.upper = upper;
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    pub fn set_priority(&mut self, col: ColId, priority: i32) {
        self.columns[col.0].priority = priority;
    }

    pub fn set_cost(&mut self, col: ColId, cost: f64) {
        self.columns[col.0].cost = cost;
    }

    pub fn find_column(&self, name: &str) -> Option<ColId> {
        self.columns.iter().position(|c| c.name == name).map(ColId)
    }

    pub fn find_row(&self, name: &str) -> Option<RowId> {
        self.rows.iter().position(|r| r.name == name).map(RowId)
    }

    /// Row activity `sum_j a_ij x_j` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.rows.len()];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, v) in &col.entries {
                act[i] += v * x[j];
            }
        }
        act
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        for c in &self.columns {
            if !c.cost.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "column {} has non-finite cost",
                    c.name
                )));
            }
            if !c.lower.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "column {} needs a finite lower bound",
                    c.name
                )));
            }
            if c.upper.is_nan() || c.upper < c.lower {
                return Err(LpError::InvalidModel(format!(
                    "column {} has empty bounds",
                    c.name
                )));
            }
            if c.integer && !c.upper.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "integer column {} must be bounded",
                    c.name
                )));
            }
            for &(i, v) in &c.entries {
                if i >= self.rows.len() || !v.is_finite() {
                    return Err(LpError::InvalidModel(format!(
                        "column {} has an invalid coefficient",
                        c.name
                    )));
                }
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!(
                    "row {} has non-finite rhs",
                    r.name
                )));
            }
        }
        Ok(())
    }

    /// Writes the model in CPLEX LP format.
    pub fn write_lp<W: Write>(&self, mut out: W) -> io::Result<()> {
        let name = |j: usize| sanitize(&self.columns[j].name, 'x', j);
        writeln!(out, "\\ generated by elrp")?;
        writeln!(out, "Minimize")?;
        write!(out, " obj:")?;
        let mut any = false;
        for (j, c) in self.columns.iter().enumerate() {
            if c.cost != 0.0 {
                write!(out, " {} {}", signed(c.cost), name(j))?;
                any = true;
            }
        }
        if !any {
            write!(
                out,
                " 0 {}",
                if self.columns.is_empty() {
                    "dummy".into()
                } else {
                    name(0)
                }
            )?;
        }
        writeln!(out)?;
        writeln!(out, "Subject To")?;
        let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.rows.len()];
        for (j, c) in self.columns.iter().enumerate() {
            for &(i, v) in &c.entries {
                by_row[i].push((j, v));
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            write!(out, " {}:", sanitize(&r.name, 'r', i))?;
            if by_row[i].is_empty() {
                write!(out, " 0 {}", name(0))?;
            }
            for &(j, v) in &by_row[i] {
                write!(out, " {} {}", signed(v), name(j))?;
            }
            writeln!(out, " {} {}", r.sense, r.rhs)?;
        }
        writeln!(out, "Bounds")?;
        for (j, c) in self.columns.iter().enumerate() {
            if c.upper.is_infinite() {
                writeln!(out, " {} >= {}", name(j), c.lower)?;
            } else {
                writeln!(out, " {} <= {} <= {}", c.lower, name(j), c.upper)?;
            }
        }
        let ints: Vec<usize> = (0..self.columns.len())
            .filter(|&j| self.columns[j].integer)
            .collect();
        if !ints.is_empty() {
            writeln!(out, "General")?;
            for j in ints {
                writeln!(out, " {}", name(j))?;
            }
        }
        writeln!(out, "End")
    }
}

fn signed(v: f64) -> String {
    if v < 0.0 {
        format!("- {}", -v)
    } else {
        format!("+ {v}")
    }
}

fn sanitize(name: &str, prefix: char, idx: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() || cleaned.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("{prefix}{idx}_{cleaned}")
    } else {
        cleaned
    }
}
