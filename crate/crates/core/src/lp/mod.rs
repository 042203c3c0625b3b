//! Linear programs over exact rationals with checkable certificates.
//!
//! Programs have the form
//!
//! ```text
//! minimize c·x   subject to   A x = b,   C x <= d,   x >= 0
//! ```
//!
//! and every reported result carries a certificate that is re-verified in
//! exact arithmetic: dual multipliers `y` (free, for `A`) and `z <= 0` (for
//! `C`) with `c - Aᵀy - Cᵀz >= 0` for optimality, a Farkas vector for
//! infeasibility, and a feasible point plus an improving ray for
//! unboundedness.
//!
//! Small programs are solved by a dense exact simplex with Bland's rule.
//! Larger ones are warm-started in floating point; the float primal and
//! dual are rationalized and accepted only if they verify exactly.

mod float;
pub mod milp;
mod simplex;

use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, Q};

pub use milp::{solve_reverse_milp, MilpProblem, MilpSolution, SignLink};

/// Sparse row: `(variable index, coefficient)`.
pub type Row = Vec<(usize, Q)>;

#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub costs: Vec<Q>,
    pub eq_rows: Vec<Row>,
    pub eq_rhs: Vec<Q>,
    pub le_rows: Vec<Row>,
    pub le_rhs: Vec<Q>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: Q) -> usize {
        self.names.push(name.into());
        self.costs.push(cost);
        self.costs.len() - 1
    }

    pub fn add_eq(&mut self, row: Row, rhs: Q) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, row: Row, rhs: Q) {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    /// `row >= rhs`, stored as `-row <= -rhs`.
    pub fn add_ge(&mut self, row: Row, rhs: Q) {
        self.add_le(row.into_iter().map(|(j, v)| (j, -v)).collect(), -rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rows.len() + self.le_rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.eq_rows.iter().chain(&self.le_rows).map(Vec::len).sum()
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.names.len() != n
            || self.eq_rows.len() != self.eq_rhs.len()
            || self.le_rows.len() != self.le_rhs.len()
        {
            return Err(Error::Contract("linear program has inconsistent dimensions".into()));
        }
        for row in self.eq_rows.iter().chain(&self.le_rows) {
            if row.iter().any(|(j, _)| *j >= n) {
                return Err(Error::Contract("constraint references unknown variable".into()));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[Q]) -> Q {
        self.costs
            .iter()
            .zip(x)
            .filter(|(c, v)| !c.is_zero() && !v.is_zero())
            .map(|(c, v)| c * v)
            .sum()
    }

    fn row_dot(row: &Row, x: &[Q]) -> Q {
        row.iter()
            .filter(|(j, _)| !x[*j].is_zero())
            .map(|(j, v)| v * &x[*j])
            .sum()
    }

    /// Exact primal feasibility.
    pub fn is_feasible(&self, x: &[Q]) -> bool {
        x.len() == self.num_vars()
            && x.iter().all(|v| !v.is_negative())
            && self
                .eq_rows
                .iter()
                .zip(&self.eq_rhs)
                .all(|(r, b)| &Self::row_dot(r, x) == b)
            && self
                .le_rows
                .iter()
                .zip(&self.le_rhs)
                .all(|(r, d)| &Self::row_dot(r, x) <= d)
    }

    /// `c - Aᵀy - Cᵀz`.
    pub fn reduced_costs(&self, y: &[Q], z: &[Q]) -> Vec<Q> {
        let mut red = self.costs.clone();
        for (row, yi) in self.eq_rows.iter().zip(y) {
            if yi.is_zero() {
                continue;
            }
            for (j, v) in row {
                red[*j] -= v * yi;
            }
        }
        for (row, zi) in self.le_rows.iter().zip(z) {
            if zi.is_zero() {
                continue;
            }
            for (j, v) in row {
                red[*j] -= v * zi;
            }
        }
        red
    }

    /// Exact dual feasibility: `z <= 0` and reduced costs nonnegative.
    pub fn is_dual_feasible(&self, y: &[Q], z: &[Q]) -> bool {
        y.len() == self.eq_rows.len()
            && z.len() == self.le_rows.len()
            && z.iter().all(|v| !v.is_positive())
            && self.reduced_costs(y, z).iter().all(|r| !r.is_negative())
    }

    pub fn dual_objective(&self, y: &[Q], z: &[Q]) -> Q {
        let a: Q = self.eq_rhs.iter().zip(y).map(|(b, v)| b * v).sum();
        let c: Q = self.le_rhs.iter().zip(z).map(|(d, v)| d * v).sum();
        a + c
    }

    /// Text dump in CPLEX LP format. Coefficients are written as exact
    /// decimals when they terminate; otherwise as `p/q` inside a comment
    /// next to a 17-digit decimal, so the file stays machine-readable.
    pub fn to_lp_format(&self) -> String {
        let num = |v: &Q| -> String {
            let s = crate::rational::to_f64(v);
            if (v * Q::from_integer(num_bigint::BigInt::from(10u64.pow(12)))).is_integer() {
                format!("{s}")
            } else {
                format!("{s:.17e}")
            }
        };
        let term = |j: usize, v: &Q| {
            let sign = if v.is_negative() { "-" } else { "+" };
            format!(" {sign} {} x{j}", num(&v.abs()))
        };
        let mut s = String::from("\\ exact rationals; x<j> are the program variables\nMinimize\n obj:");
        for (j, c) in self.costs.iter().enumerate() {
            if !c.is_zero() {
                s.push_str(&term(j, c));
            }
        }
        s.push_str("\nSubject To\n");
        for (i, (row, b)) in self.eq_rows.iter().zip(&self.eq_rhs).enumerate() {
            let _ = write!(s, " e{i}:");
            for (j, v) in row {
                s.push_str(&term(*j, v));
            }
            let _ = writeln!(s, " = {}  \\ {}", num(b), fmt_q(b));
        }
        for (i, (row, d)) in self.le_rows.iter().zip(&self.le_rhs).enumerate() {
            let _ = write!(s, " l{i}:");
            for (j, v) in row {
                s.push_str(&term(*j, v));
            }
            let _ = writeln!(s, " <= {}  \\ {}", num(d), fmt_q(d));
        }
        s.push_str("End\n");
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (optimal or, for unbounded programs, feasible).
    pub x: Vec<Q>,
    pub objective: Q,
    /// Multipliers of the equality rows (Farkas vector when infeasible).
    pub eq_duals: Vec<Q>,
    /// Multipliers of the inequality rows, all `<= 0`.
    pub le_duals: Vec<Q>,
    /// `b·y + d·z`, a certified lower bound on the optimum.
    pub dual_objective: Q,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<Q>>,
    pub iterations: usize,
}

impl LpSolution {
    /// Certified `objective - optimum`, zero when the duals close the gap.
    pub fn gap(&self) -> Q {
        &self.objective - &self.dual_objective
    }
}

/// Exact check of an optimality certificate: primal feasibility, dual
/// feasibility and complementary slackness.
pub fn verify_certificate(p: &LinearProgram, s: &LpSolution) -> bool {
    if s.status != LpStatus::Optimal {
        return false;
    }
    if !p.is_feasible(&s.x) || !p.is_dual_feasible(&s.eq_duals, &s.le_duals) {
        return false;
    }
    let red = p.reduced_costs(&s.eq_duals, &s.le_duals);
    let cs_vars = red.iter().zip(&s.x).all(|(r, x)| r.is_zero() || x.is_zero());
    let cs_rows = p
        .le_rows
        .iter()
        .zip(&p.le_rhs)
        .zip(&s.le_duals)
        .all(|((row, d), z)| z.is_zero() || &LinearProgram::row_dot(row, &s.x) == d);
    cs_vars && cs_rows && p.objective(&s.x) == s.objective
}

/// Exact check that the solution is feasible and within `budget` of optimal.
pub fn verify_within(p: &LinearProgram, s: &LpSolution, budget: &Q) -> bool {
    s.status == LpStatus::Optimal
        && p.is_feasible(&s.x)
        && p.is_dual_feasible(&s.eq_duals, &s.le_duals)
        && p.objective(&s.x) == s.objective
        && p.dual_objective(&s.eq_duals, &s.le_duals) == s.dual_objective
        && &s.gap() <= budget
}

/// Exact check of an infeasibility certificate: `Aᵀy + Cᵀz <= 0`, `z <= 0`,
/// and `b·y + d·z > 0`.
pub fn verify_infeasibility(p: &LinearProgram, y: &[Q], z: &[Q]) -> bool {
    if y.len() != p.eq_rows.len() || z.len() != p.le_rows.len() || z.iter().any(|v| v.is_positive()) {
        return false;
    }
    let mut g = vec![Q::zero(); p.num_vars()];
    for (row, v) in p.eq_rows.iter().zip(y).chain(p.le_rows.iter().zip(z)) {
        if v.is_zero() {
            continue;
        }
        for (j, a) in row {
            g[*j] += a * v;
        }
    }
    g.iter().all(|v| !v.is_positive()) && p.dual_objective(y, z).is_positive()
}

/// Exact check of an unboundedness certificate.
pub fn verify_unbounded(p: &LinearProgram, x: &[Q], ray: &[Q]) -> bool {
    if !p.is_feasible(x) || ray.len() != p.num_vars() || ray.iter().any(|v| v.is_negative()) {
        return false;
    }
    p.eq_rows.iter().all(|r| LinearProgram::row_dot(r, ray).is_zero())
        && p.le_rows.iter().all(|r| !LinearProgram::row_dot(r, ray).is_positive())
        && p.objective(ray).is_negative()
}

/// Solver controls.
#[derive(Clone, Debug)]
pub struct LpOptions {
    /// Accepted certified gap between the primal and dual objectives.
    pub budget: Q,
    /// Pivot limit for the exact simplex.
    pub iteration_limit: usize,
    /// Tableau size (rows × columns) up to which the exact simplex is used directly.
    pub exact_size_limit: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            budget: Q::zero(),
            iteration_limit: 200_000,
            exact_size_limit: 60_000,
        }
    }
}

/// Solves the program, returning a certified result.
pub fn solve_lp(p: &LinearProgram, budget: &Q) -> Result<LpSolution> {
    solve_lp_with(
        p,
        &LpOptions {
            budget: budget.clone(),
            ..Default::default()
        },
    )
}

pub fn solve_lp_with(p: &LinearProgram, opts: &LpOptions) -> Result<LpSolution> {
    p.validate()?;
    let rows = p.num_rows();
    let cols = p.num_vars() + p.le_rows.len() + rows;
    let small = rows.saturating_mul(cols) <= opts.exact_size_limit;
    let sol = if small {
        simplex::solve(p, opts.iteration_limit)?
    } else {
        match float::solve(p, &opts.budget) {
            Ok(sol) => sol,
            Err(e) => {
                if rows.saturating_mul(cols) <= 8 * opts.exact_size_limit {
                    simplex::solve(p, opts.iteration_limit)?
                } else {
                    return Err(e);
                }
            }
        }
    };
    debug_assert!(certified(p, &sol, &opts.budget));
    if !certified(p, &sol, &opts.budget) {
        return Err(Error::Certification("solver output failed exact verification".into()));
    }
    Ok(sol)
}

fn certified(p: &LinearProgram, s: &LpSolution, budget: &Q) -> bool {
    match s.status {
        LpStatus::Optimal => verify_within(p, s, budget),
        LpStatus::Infeasible => verify_infeasibility(p, &s.eq_duals, &s.le_duals),
        LpStatus::Unbounded => s.ray.as_ref().is_some_and(|r| verify_unbounded(p, &s.x, r)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, ratio};

    fn single(n: usize, j: usize, v: i64) -> Row {
        let _ = n;
        vec![(j, q(v))]
    }

    #[test]
    fn trivial_equality() {
        let mut p = LinearProgram::new();
        let x = p.add_var("x", q(1));
        p.add_eq(single(1, x, 1), q(1));
        let s = solve_lp(&p, &q(0)).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![q(1)]);
        assert_eq!(s.objective, q(1));
        assert!(verify_certificate(&p, &s));
    }

    #[test]
    fn symmetric_pair() {
        let mut p = LinearProgram::new();
        let a = p.add_var("x1", q(1));
        let b = p.add_var("x2", q(1));
        p.add_eq(vec![(a, q(1)), (b, q(-1))], q(0));
        p.add_ge(vec![(a, q(1)), (b, q(1))], q(2));
        let s = solve_lp(&p, &q(0)).unwrap();
        assert_eq!(s.objective, q(2));
        assert_eq!(s.x, vec![q(1), q(1)]);
        assert!(verify_certificate(&p, &s));
        assert_eq!(s.dual_objective, q(2));
    }

    #[test]
    fn certificate_rejects_perturbations() {
        let mut p = LinearProgram::new();
        let a = p.add_var("x1", q(1));
        let b = p.add_var("x2", q(2));
        p.add_ge(vec![(a, q(1)), (b, q(1))], q(3));
        p.add_le(vec![(a, q(1))], q(2));
        let s = solve_lp(&p, &q(0)).unwrap();
        assert_eq!(s.objective, q(4));
        assert!(verify_certificate(&p, &s));
        let mut bad = s.clone();
        bad.x[0] += q(1);
        assert!(!verify_certificate(&p, &bad));
        let mut dropped = s.clone();
        let k = dropped
            .le_duals
            .iter()
            .position(|z| !z.is_zero())
            .expect("an active inequality");
        dropped.le_duals[k] = q(0);
        assert!(!verify_certificate(&p, &dropped));
    }

    #[test]
    fn infeasible_has_farkas_certificate() {
        let mut p = LinearProgram::new();
        let x = p.add_var("x", q(1));
        p.add_eq(vec![(x, q(1))], q(0));
        p.add_ge(vec![(x, q(1))], q(1));
        let s = solve_lp(&p, &q(0)).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(verify_infeasibility(&p, &s.eq_duals, &s.le_duals));
    }

    #[test]
    fn unbounded_has_ray() {
        let mut p = LinearProgram::new();
        let x = p.add_var("x", q(-1));
        let y = p.add_var("y", q(0));
        p.add_eq(vec![(x, q(1)), (y, q(-1))], q(1));
        let s = solve_lp(&p, &q(0)).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        assert!(verify_unbounded(&p, &s.x, s.ray.as_ref().unwrap()));
    }

    #[test]
    fn fractional_optimum() {
        // min x + y s.t. 3x + y >= 2, x + 3y >= 2 -> x = y = 1/2.
        let mut p = LinearProgram::new();
        let x = p.add_var("x", q(1));
        let y = p.add_var("y", q(1));
        p.add_ge(vec![(x, q(3)), (y, q(1))], q(2));
        p.add_ge(vec![(x, q(1)), (y, q(3))], q(2));
        let s = solve_lp(&p, &q(0)).unwrap();
        assert_eq!(s.objective, q(1));
        assert_eq!(s.x, vec![ratio(1, 2), ratio(1, 2)]);
        assert!(verify_certificate(&p, &s));
    }

    #[test]
    fn lp_text_dump_mentions_rows() {
        let mut p = LinearProgram::new();
        let x = p.add_var("x", ratio(1, 3));
        p.add_eq(vec![(x, q(1))], q(1));
        let t = p.to_lp_format();
        assert!(t.contains("Minimize") && t.contains("e0:") && t.contains("End"));
    }
}
