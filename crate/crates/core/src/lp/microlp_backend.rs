use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{LpProblem, LpSolution, LpStatus, Relation};

pub(super) fn solve(problem: &LpProblem) -> LpSolution {
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let cols: Vec<_> = problem.vars().iter().map(|v| pb.add_var(v.cost, (v.lower, v.upper))).collect();
    for row in problem.constraints() {
        let op = match row.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Ge => ComparisonOp::Ge,
            Relation::Eq => ComparisonOp::Eq,
        };
        let expr: Vec<_> = row.coeffs.iter().map(|&(v, c)| (cols[v.index()], c)).collect();
        pb.add_constraint(expr, op, row.rhs);
    }
    match pb.solve() {
        Ok(outcome) if outcome.is_optimal() => match outcome.into_solution() {
            Ok(sol) => {
                let values = cols.iter().map(|&c| sol.var_value(c)).collect();
                LpSolution { status: LpStatus::Optimal, objective: sol.objective(), values }
            }
            Err(_) => LpSolution::failed(LpStatus::NumericFailure),
        },
        Ok(_) => LpSolution::failed(LpStatus::NumericFailure),
        Err(microlp::Error::Infeasible) => LpSolution::failed(LpStatus::Infeasible),
        Err(microlp::Error::Unbounded) => LpSolution::failed(LpStatus::Unbounded),
        Err(_) => LpSolution::failed(LpStatus::NumericFailure),
    }
}
