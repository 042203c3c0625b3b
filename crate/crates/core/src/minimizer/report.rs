//! Iteration log (CSV) and the human-readable certification report.

use std::fmt::Write as _;

use crate::rational::{fmt_q, Q};
use crate::region::Hausdorff;

use super::driver::{IterationRecord, RunResult};

pub const CSV_HEADER: &str = "level,eps_i,h,mass_T,mass_T_outside_K,mass_Q,C1,C2,lp_iters,bnb_nodes";

fn opt(v: &Option<Q>) -> String {
    v.as_ref().map(fmt_q).unwrap_or_else(|| "-".into())
}

pub fn record_csv_line(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.level,
        fmt_q(&r.eps),
        fmt_q(&r.grid.spacing),
        fmt_q(&r.mass_t),
        opt(&r.mass_t_outside_k),
        r.mass_q.as_ref().map(ToString::to_string).unwrap_or_else(|| "-".into()),
        r.c1,
        r.c2,
        r.lp_iterations,
        r.bnb_nodes
    )
}

pub fn iteration_csv(records: &[IterationRecord]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&record_csv_line(r));
        s.push('\n');
    }
    s
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn hausdorff_text(h: &Hausdorff) -> String {
    match h {
        Hausdorff::EmptyInput => "empty support".into(),
        Hausdorff::Bounded(b) if b.is_exact() => format!("d^2 = {}", fmt_q(&b.lower_sq)),
        Hausdorff::Bounded(b) => format!("{} <= d^2 <= {}", fmt_q(&b.lower_sq), fmt_q(&b.upper_sq)),
    }
}

/// Restates the exit checks with exact values.
pub fn certification_report(r: &RunResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "status: {}", if r.certified { "CERTIFIED" } else { "NOT CERTIFIED" });
    let _ = writeln!(s, "epsilon: {}", fmt_q(&r.epsilon));
    if let Some(level) = r.level {
        let _ = writeln!(s, "terminal level: {level}");
    }
    if let Some(e) = &r.eps_final {
        let _ = writeln!(s, "eps_i at exit: {}", fmt_q(e));
    }
    if let Some(ing) = &r.ingestion {
        let _ = writeln!(s, "ingestion displacement bound: {}", fmt_q(&ing.displacement_bound));
    }
    let _ = writeln!(s, "mass of T': {}", fmt_q(&r.t_prime.mass()));
    if let Some(c) = &r.checks {
        let _ = writeln!(s, "(1) spt(dT') in U: {}", verdict(c.boundary_in_u));
        let _ = writeln!(
            s,
            "(2) dist_H(spt dT', spt B) < epsilon: {} ({})",
            verdict(c.hausdorff_ok),
            hausdorff_text(&c.hausdorff)
        );
        let _ = writeln!(
            s,
            "(3) B = dS + dT', spt S in U, M(S) < epsilon: {} (M(S) = {}, identity {}, in U {})",
            verdict(c.witness_ok),
            fmt_q(&c.witness_mass),
            c.witness_identity,
            c.witness_in_u
        );
        let _ = writeln!(
            s,
            "(4) M(T') < epsilon + mu_grid: {} (M(T') = {}, mu_grid = {})",
            verdict(c.mass_ok),
            fmt_q(&c.mass_t_prime),
            fmt_q(&c.mu_grid)
        );
        let _ = writeln!(
            s,
            "(5) C1 and 2 eps_i + epsilon/2 <= epsilon: {} (bound = {})",
            verdict(c.structural_ok),
            fmt_q(&c.structural_bound)
        );
    }
    for d in &r.diagnostics {
        let _ = writeln!(s, "note: {d}");
    }
    s
}
