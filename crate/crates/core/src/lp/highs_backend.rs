use std::ops::Bound;

use highs::{HighsModelStatus, RowProblem, Sense};

use super::{LpProblem, LpSolution, LpStatus, Relation};

fn row_bounds(relation: Relation, rhs: f64) -> (Bound<f64>, Bound<f64>) {
    match relation {
        Relation::Le => (Bound::Unbounded, Bound::Included(rhs)),
        Relation::Ge => (Bound::Included(rhs), Bound::Unbounded),
        Relation::Eq => (Bound::Included(rhs), Bound::Included(rhs)),
    }
}

fn col_bounds(lower: f64, upper: f64) -> (Bound<f64>, Bound<f64>) {
    let lo = if lower == f64::NEG_INFINITY { Bound::Unbounded } else { Bound::Included(lower) };
    let hi = if upper == f64::INFINITY { Bound::Unbounded } else { Bound::Included(upper) };
    (lo, hi)
}

fn run(problem: &LpProblem, presolve: bool) -> Option<(HighsModelStatus, Vec<f64>)> {
    let mut pb = RowProblem::default();
    let cols: Vec<_> = problem
        .vars()
        .iter()
        .map(|v| pb.add_column(v.cost, col_bounds(v.lower, v.upper)))
        .collect();
    for row in problem.constraints() {
        let coeffs: Vec<_> = row.coeffs.iter().map(|&(v, c)| (cols[v.index()], c)).collect();
        pb.add_row(row_bounds(row.relation, row.rhs), coeffs);
    }
    let mut model = pb.try_optimise(Sense::Minimise).ok()?;
    model.make_quiet();
    model.set_option("threads", 1);
    model.set_option("primal_feasibility_tolerance", 1e-9);
    model.set_option("dual_feasibility_tolerance", 1e-9);
    if !presolve {
        model.set_option("presolve", "off");
    }
    let solved = model.try_solve().ok()?;
    let status = solved.status();
    let values = if status == HighsModelStatus::Optimal {
        solved.get_solution().columns().to_vec()
    } else {
        Vec::new()
    };
    Some((status, values))
}

pub(super) fn solve(problem: &LpProblem) -> LpSolution {
    let Some((mut status, mut values)) = run(problem, true) else {
        return LpSolution::failed(LpStatus::NumericFailure);
    };
    if status == HighsModelStatus::UnboundedOrInfeasible {
        // Presolve cannot always tell the two apart; the simplex run without it can.
        match run(problem, false) {
            Some(r) => (status, values) = r,
            None => return LpSolution::failed(LpStatus::NumericFailure),
        }
    }
    match status {
        HighsModelStatus::Optimal => LpSolution { status: LpStatus::Optimal, objective: 0.0, values },
        HighsModelStatus::Infeasible => LpSolution::failed(LpStatus::Infeasible),
        HighsModelStatus::Unbounded => LpSolution::failed(LpStatus::Unbounded),
        _ => LpSolution::failed(LpStatus::NumericFailure),
    }
}
