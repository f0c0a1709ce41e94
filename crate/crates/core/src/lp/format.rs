//! CPLEX LP text output.

use alloc::string::String;
use core::fmt::Write;

use super::{LpProblem, Relation, Sign, VarId};

fn name(p: &LpProblem, v: VarId) -> &str {
    &p.variables()[v.0].name
}

fn write_terms(out: &mut String, p: &LpProblem, terms: &[(VarId, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (i, &(v, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { '-' } else { '+' };
        if i == 0 && a >= 0.0 {
            let _ = write!(out, " {} {}", a, name(p, v));
        } else {
            let _ = write!(out, " {sign} {} {}", a.abs(), name(p, v));
        }
    }
}

pub(super) fn write_lp(p: &LpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", p.name);
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, p, p.objective_terms());
    out.push_str("\nSubject To\n");
    for (i, c) in p.constraints().iter().enumerate() {
        let label = if c.name.is_empty() { alloc::format!("c{i}") } else { c.name.clone() };
        let _ = write!(out, " {label}:");
        write_terms(&mut out, p, &c.terms);
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in p.variables() {
        if v.sign == Sign::Free {
            let _ = writeln!(out, " {} free", v.name);
        }
    }
    out.push_str("End\n");
    out
}
