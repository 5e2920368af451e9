//! Sparse linear programs and the solver boundary.
//!
//! Every optimisation in the crate is a pure LP written against [`LpProblem`]. A
//! [`Backend`] turns it into an [`LpSolution`]; the result is re-checked against the
//! original rows before it is reported as optimal, so a backend that returns a point
//! outside the feasibility tolerance surfaces as [`LpStatus::NumericFailure`].

mod highs_backend;
mod microlp_backend;
mod mps;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Absolute tolerance on constraint residuals and bound violations.
pub const TOL_FEAS: f64 = 1e-7;
/// Relative tolerance on objective values.
pub const TOL_OPT: f64 = 1e-6;

/// Environment variable selecting the LP backend.
pub const SOLVER_ENV: &str = "RECCOORD_SOLVER";

/// Column index of a variable in an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    /// Signed violation of the row at `x`; zero when satisfied.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs: f64 = self.coeffs.iter().map(|(v, c)| c * x[v.0]).sum();
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint `{row}` references unknown variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {location}")]
    NonFinite { location: String },
}

/// A minimisation LP: bounded columns, a linear objective and sparse rows.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        self.vars.push(Variable { name: name.into(), lower, upper, cost });
        VarId(self.vars.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        self.rows.push(Constraint { name: name.into(), coeffs, relation, rhs });
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost = cost;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    /// Pins a variable to `value`.
    pub fn fix(&mut self, var: VarId, value: f64) {
        self.set_bounds(var, value, value);
    }

    pub fn var(&self, var: VarId) -> &Variable {
        &self.vars[var.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Returns a copy with the rows listed in `order` (a permutation of row indices).
    pub fn with_row_order(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.rows.len(), "row permutation has wrong length");
        Self { vars: self.vars.clone(), rows: order.iter().map(|&i| self.rows[i].clone()).collect() }
    }

    /// Checks the structural invariants: indices in range, ordered bounds, finite data.
    pub fn check(&self) -> Result<(), LpError> {
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(LpError::NonFinite { location: format!("variable `{}`", v.name) });
            }
            if v.lower > v.upper {
                return Err(LpError::InvertedBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite { location: format!("rhs of `{}`", row.name) });
            }
            for &(var, c) in &row.coeffs {
                if var.0 >= self.vars.len() {
                    return Err(LpError::UnknownVariable { row: row.name.clone(), index: var.0 });
                }
                if !c.is_finite() {
                    return Err(LpError::NonFinite { location: format!("row `{}`", row.name) });
                }
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum()
    }

    /// Largest bound or row violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(x));
        bounds.chain(rows).fold(0.0, f64::max)
    }

    /// Fixed-format MPS dump, for cross-checking against external solvers.
    pub fn to_mps(&self, name: &str) -> String {
        mps::write_fixed_mps(self, name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The backend failed, or returned a point that does not pass the feasibility re-check.
    NumericFailure,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::NumericFailure => "numeric failure",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Column values, indexed by [`VarId`]. Empty unless the status is optimal.
    pub values: Vec<f64>,
}

impl LpSolution {
    pub fn failed(status: LpStatus) -> Self {
        Self { status, objective: f64::NAN, values: Vec::new() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }

    pub fn value_by_name(&self, problem: &LpProblem, name: &str) -> Option<f64> {
        if !self.is_optimal() {
            return None;
        }
        problem.var_by_name(name).map(|v| self.value(v))
    }
}

/// The LP engines compiled into the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// HiGHS dual simplex.
    #[default]
    Highs,
    /// Pure-Rust sparse simplex.
    Microlp,
}

impl Backend {
    /// Backend named by `RECCOORD_SOLVER`, or the default when unset.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(SOLVER_ENV) {
            Ok(name) if !name.trim().is_empty() => name.parse(),
            _ => Ok(Self::default()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Highs => "highs",
            Backend::Microlp => "microlp",
        }
    }

    pub fn solve(self, problem: &LpProblem) -> LpSolution {
        if problem.check().is_err() {
            return LpSolution::failed(LpStatus::NumericFailure);
        }
        if problem.num_vars() == 0 {
            let raw = LpSolution { status: LpStatus::Optimal, objective: 0.0, values: Vec::new() };
            let ok = problem.max_violation(&[]) <= TOL_FEAS;
            return if ok { raw } else { LpSolution::failed(LpStatus::Infeasible) };
        }
        let raw = match self {
            Backend::Highs => highs_backend::solve(problem),
            Backend::Microlp => microlp_backend::solve(problem),
        };
        certify(problem, raw)
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "highs" => Ok(Backend::Highs),
            "microlp" => Ok(Backend::Microlp),
            other => Err(format!("unknown LP backend `{other}` (expected highs or microlp)")),
        }
    }
}

/// Solves with the default backend.
pub fn solve_lp(problem: &LpProblem) -> LpSolution {
    Backend::default().solve(problem)
}

fn certify(problem: &LpProblem, raw: LpSolution) -> LpSolution {
    if raw.status != LpStatus::Optimal {
        return LpSolution { values: Vec::new(), objective: f64::NAN, ..raw };
    }
    if raw.values.len() != problem.num_vars() || raw.values.iter().any(|v| !v.is_finite()) {
        return LpSolution::failed(LpStatus::NumericFailure);
    }
    let worst = problem.max_violation(&raw.values);
    if worst > TOL_FEAS {
        log::warn!("LP backend returned a point violating the model by {worst:e}");
        return LpSolution::failed(LpStatus::NumericFailure);
    }
    // Recompute rather than trust the backend's objective (presolve offsets, scaling).
    let objective = problem.objective_at(&raw.values);
    LpSolution { status: LpStatus::Optimal, objective, values: raw.values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backends() -> [Backend; 2] {
        [Backend::Highs, Backend::Microlp]
    }

    #[test]
    fn single_bound_row() {
        for b in backends() {
            let mut p = LpProblem::new();
            let x = p.add_var("x", 0.0, 10.0, 1.0);
            p.add_constraint("lo", vec![(x, 1.0)], Relation::Ge, 3.0);
            let s = b.solve(&p);
            assert_eq!(s.status, LpStatus::Optimal, "{b:?}");
            assert!((s.objective - 3.0).abs() < 1e-9);
            assert!((s.value(x) - 3.0).abs() < 1e-9);
            assert_eq!(s.value_by_name(&p, "x"), Some(s.value(x)));
        }
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        for b in backends() {
            let mut p = LpProblem::new();
            let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
            p.add_constraint("lo", vec![(x, 1.0)], Relation::Ge, 3.0);
            p.add_constraint("hi", vec![(x, 1.0)], Relation::Le, 2.0);
            assert_eq!(b.solve(&p).status, LpStatus::Infeasible, "{b:?}");
        }
    }

    #[test]
    fn simplex_edge_optimum() {
        for b in backends() {
            let mut p = LpProblem::new();
            let x = p.add_var("x", 0.0, f64::INFINITY, -1.0);
            let y = p.add_var("y", 0.0, f64::INFINITY, -1.0);
            p.add_constraint("cap", vec![(x, 1.0), (y, 1.0)], Relation::Le, 1.0);
            let s = b.solve(&p);
            assert_eq!(s.status, LpStatus::Optimal);
            assert!((s.objective + 1.0).abs() < 1e-9);
            assert!((s.value(x) + s.value(y) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn unbounded_direction() {
        for b in backends() {
            let mut p = LpProblem::new();
            let x = p.add_var("x", 0.0, f64::INFINITY, -1.0);
            p.add_constraint("lo", vec![(x, 1.0)], Relation::Ge, 1.0);
            assert_eq!(b.solve(&p).status, LpStatus::Unbounded, "{b:?}");
        }
    }

    #[test]
    fn structural_checks() {
        let mut p = LpProblem::new();
        let x = p.add_var("x", 2.0, 1.0, 0.0);
        assert!(matches!(p.check(), Err(LpError::InvertedBounds { .. })));
        p.set_bounds(x, 0.0, 1.0);
        p.add_constraint("bad", vec![(VarId(7), 1.0)], Relation::Le, 1.0);
        assert!(matches!(p.check(), Err(LpError::UnknownVariable { index: 7, .. })));
        assert_eq!(Backend::Highs.solve(&p).status, LpStatus::NumericFailure);

        let mut q = LpProblem::new();
        let y = q.add_var("y", 0.0, 1.0, 0.0);
        q.add_constraint("nan", vec![(y, f64::NAN)], Relation::Le, 1.0);
        assert!(matches!(q.check(), Err(LpError::NonFinite { .. })));
    }

    #[test]
    fn empty_problem_is_trivially_optimal() {
        let p = LpProblem::new();
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn backend_names_parse() {
        assert_eq!("HiGHS".parse::<Backend>(), Ok(Backend::Highs));
        assert_eq!("microlp".parse::<Backend>(), Ok(Backend::Microlp));
        assert!("cplex".parse::<Backend>().is_err());
    }
}
