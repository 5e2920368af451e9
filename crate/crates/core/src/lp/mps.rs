use std::fmt::Write;

use super::{LpProblem, Relation};

// Fixed MPS limits names to 8 characters, so columns and rows get positional
// names; the original names are listed in the comment header.
fn col_name(i: usize) -> String {
    format!("C{i:07}")
}

fn row_name(i: usize) -> String {
    format!("R{i:07}")
}

fn num(v: f64) -> String {
    // 12 characters fit the fixed-format numeric fields.
    let s = format!("{v}");
    if s.len() <= 12 {
        s
    } else {
        format!("{v:.5e}")
    }
}

pub(super) fn write_fixed_mps(p: &LpProblem, name: &str) -> String {
    let mut out = String::new();
    for (i, v) in p.vars().iter().enumerate() {
        let _ = writeln!(out, "* {} {}", col_name(i), v.name);
    }
    for (i, r) in p.constraints().iter().enumerate() {
        let _ = writeln!(out, "* {} {}", row_name(i), r.name);
    }
    let _ = writeln!(out, "NAME          {}", &name[..name.len().min(8)]);
    out.push_str("ROWS\n N  COST\n");
    for (i, r) in p.constraints().iter().enumerate() {
        let kind = match r.relation {
            Relation::Le => 'L',
            Relation::Ge => 'G',
            Relation::Eq => 'E',
        };
        let _ = writeln!(out, " {kind}  {}", row_name(i));
    }

    // Column-major entries.
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.num_vars()];
    for (i, r) in p.constraints().iter().enumerate() {
        for &(v, c) in &r.coeffs {
            by_col[v.index()].push((i, c));
        }
    }
    out.push_str("COLUMNS\n");
    for (j, v) in p.vars().iter().enumerate() {
        let mut entries: Vec<(String, f64)> = Vec::new();
        if v.cost != 0.0 || by_col[j].is_empty() {
            entries.push(("COST".to_string(), v.cost));
        }
        entries.extend(by_col[j].iter().map(|&(i, c)| (row_name(i), c)));
        for (row, c) in entries {
            let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", col_name(j), row, num(c));
        }
    }

    out.push_str("RHS\n");
    for (i, r) in p.constraints().iter().enumerate() {
        if r.rhs != 0.0 {
            let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", row_name(i), num(r.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in p.vars().iter().enumerate() {
        let c = col_name(j);
        let (lo, hi) = (v.lower, v.upper);
        if lo == hi {
            let _ = writeln!(out, " FX {:<8}  {:<8}  {:>12}", "BND", c, num(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " FR {:<8}  {:<8}", "BND", c);
            continue;
        }
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI {:<8}  {:<8}", "BND", c);
        } else if lo != 0.0 {
            let _ = writeln!(out, " LO {:<8}  {:<8}  {:>12}", "BND", c, num(lo));
        }
        if hi != f64::INFINITY {
            let _ = writeln!(out, " UP {:<8}  {:<8}  {:>12}", "BND", c, num(hi));
        }
    }
    out.push_str("ENDATA\n");
    out
}
