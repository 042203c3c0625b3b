//! Floating-point warm start: solve the primal and the dual separately in
//! `f64`, rationalize both, and keep the result only if it verifies exactly.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use num_traits::{One, Signed, Zero};

use super::{LinearProgram, LpSolution, LpStatus};
use crate::error::{Error, Result};
use crate::rational::{rationalize, to_f64, Q};

const MAX_DEN: i64 = 1 << 24;
const TOL: f64 = 1e-7;

fn rat(v: f64) -> Option<Q> {
    rationalize(v, MAX_DEN, TOL)
}

/// Column-major copy of the constraint matrix.
fn columns(p: &LinearProgram) -> Vec<Vec<(usize, f64)>> {
    let m1 = p.eq_rows.len();
    let mut cols = vec![Vec::new(); p.num_vars()];
    for (i, row) in p.eq_rows.iter().enumerate() {
        for (j, v) in row {
            cols[*j].push((i, to_f64(v)));
        }
    }
    for (k, row) in p.le_rows.iter().enumerate() {
        for (j, v) in row {
            cols[*j].push((m1 + k, to_f64(v)));
        }
    }
    cols
}

fn primal(p: &LinearProgram) -> std::result::Result<Vec<f64>, microlp::Error> {
    let mut prob = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = p
        .costs
        .iter()
        .map(|c| prob.add_var(to_f64(c), (0.0, f64::INFINITY)))
        .collect();
    for (row, b) in p.eq_rows.iter().zip(&p.eq_rhs) {
        prob.add_constraint(
            row.iter().map(|(j, v)| (vars[*j], to_f64(v))).collect::<Vec<_>>(),
            ComparisonOp::Eq,
            to_f64(b),
        );
    }
    for (row, d) in p.le_rows.iter().zip(&p.le_rhs) {
        prob.add_constraint(
            row.iter().map(|(j, v)| (vars[*j], to_f64(v))).collect::<Vec<_>>(),
            ComparisonOp::Le,
            to_f64(d),
        );
    }
    let sol = prob
        .solve()?
        .into_solution()
        .map_err(|_| microlp::Error::InternalError("interrupted".into()))?;
    Ok(vars.iter().map(|v| sol.var_value(*v)).collect())
}

/// Solves `max b·y + d·z` subject to `Aᵀy + Cᵀz <= costs`, `z <= 0`, with
/// optional box bounds on the multipliers (used for Farkas vectors).
fn dual(
    p: &LinearProgram,
    costs: &[f64],
    bound: Option<f64>,
) -> std::result::Result<(Vec<f64>, Vec<f64>), microlp::Error> {
    let mut prob = Problem::new(OptimizationDirection::Maximize);
    let free = bound.map_or((f64::NEG_INFINITY, f64::INFINITY), |b| (-b, b));
    let nonpos = bound.map_or((f64::NEG_INFINITY, 0.0), |b| (-b, 0.0));
    let y: Vec<_> = p.eq_rhs.iter().map(|b| prob.add_var(to_f64(b), free)).collect();
    let z: Vec<_> = p.le_rhs.iter().map(|d| prob.add_var(to_f64(d), nonpos)).collect();
    let m1 = y.len();
    for (j, col) in columns(p).into_iter().enumerate() {
        if col.is_empty() {
            continue;
        }
        let expr: Vec<_> = col
            .into_iter()
            .map(|(i, v)| (if i < m1 { y[i] } else { z[i - m1] }, v))
            .collect();
        prob.add_constraint(expr, ComparisonOp::Le, costs[j]);
    }
    let sol = prob
        .solve()?
        .into_solution()
        .map_err(|_| microlp::Error::InternalError("interrupted".into()))?;
    Ok((
        y.iter().map(|v| sol.var_value(*v)).collect(),
        z.iter().map(|v| sol.var_value(*v)).collect(),
    ))
}

/// The dual, retried with boxed multipliers when the free version stalls on
/// its (often large) space of optimal directions. A boxed optimum is still
/// dual feasible, and the gap check decides whether it is good enough.
fn bounded_dual(p: &LinearProgram, costs: &[f64]) -> std::result::Result<(Vec<f64>, Vec<f64>), microlp::Error> {
    match dual(p, costs, None) {
        Ok(v) => Ok(v),
        Err(first) => {
            let scale = costs.iter().fold(1.0f64, |m, c| m.max(c.abs()));
            for b in [1e2, 1e4] {
                if let Ok(v) = dual(p, costs, Some(b * scale)) {
                    return Ok(v);
                }
            }
            Err(first)
        }
    }
}

fn rationalize_all(v: &[f64]) -> Option<Vec<Q>> {
    v.iter().map(|x| rat(*x)).collect()
}

/// `Aᵀy + Cᵀz`.
fn transpose_product(p: &LinearProgram, y: &[Q], z: &[Q]) -> Vec<Q> {
    let mut g = vec![Q::zero(); p.num_vars()];
    for (row, yi) in p.eq_rows.iter().zip(y).chain(p.le_rows.iter().zip(z)) {
        if yi.is_zero() {
            continue;
        }
        for (j, v) in row {
            g[*j] += v * yi;
        }
    }
    g
}

/// Scales a nearly dual-feasible `(y, z)` into exact feasibility when all
/// costs are nonnegative. Returns `None` if no scaling works.
fn repair_dual(p: &LinearProgram, y: &mut [Q], z: &mut [Q]) -> Option<()> {
    for v in z.iter_mut() {
        if v.is_positive() {
            *v = Q::zero();
        }
    }
    let mut g = transpose_product(p, y, z);
    // A nonnegative inequality row can absorb violations on its own columns
    // by lowering its (nonpositive) multiplier.
    for (k, row) in p.le_rows.iter().enumerate() {
        if row.is_empty() || row.iter().any(|(_, v)| v.is_negative()) {
            continue;
        }
        let mut need = Q::zero();
        for (j, v) in row {
            if v.is_positive() && g[*j] > p.costs[*j] {
                let d = (&g[*j] - &p.costs[*j]) / v;
                if d > need {
                    need = d;
                }
            }
        }
        if need.is_positive() {
            z[k] -= &need;
            for (j, v) in row {
                g[*j] -= v * &need;
            }
        }
    }
    let mut lambda = Q::one();
    for (gj, cj) in g.iter().zip(&p.costs) {
        if gj > cj {
            if cj.is_negative() {
                return None;
            }
            let l = cj / gj;
            if l < lambda {
                lambda = l;
            }
        } else if cj.is_negative() && gj.is_negative() {
            // Shrinking would move a negative product toward zero past c_j.
            continue;
        }
    }
    if lambda.is_one() {
        return Some(());
    }
    if p.costs.iter().any(|c| c.is_negative()) {
        return None;
    }
    for v in y.iter_mut().chain(z.iter_mut()) {
        *v *= &lambda;
    }
    Some(())
}

pub(super) fn solve(p: &LinearProgram, budget: &Q) -> Result<LpSolution> {
    let fail = |why: &str| Error::Certification(format!("float warm start: {why}"));
    match primal(p) {
        Ok(xf) => {
            let mut x = rationalize_all(&xf).ok_or_else(|| fail("primal not rationalizable"))?;
            for v in x.iter_mut() {
                if v.is_negative() {
                    *v = Q::zero();
                }
            }
            if !p.is_feasible(&x) {
                return Err(fail("rationalized primal is infeasible"));
            }
            let costs: Vec<f64> = p.costs.iter().map(to_f64).collect();
            let (yf, zf) = bounded_dual(p, &costs).map_err(|e| fail(&format!("dual: {e}")))?;
            let mut y = rationalize_all(&yf).ok_or_else(|| fail("dual not rationalizable"))?;
            let mut z = rationalize_all(&zf).ok_or_else(|| fail("dual not rationalizable"))?;
            repair_dual(p, &mut y, &mut z).ok_or_else(|| fail("dual not repairable"))?;
            if !p.is_dual_feasible(&y, &z) {
                return Err(fail("rationalized dual is infeasible"));
            }
            let objective = p.objective(&x);
            let dual_objective = p.dual_objective(&y, &z);
            if &(&objective - &dual_objective) > budget {
                return Err(fail("certified gap exceeds budget"));
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
                eq_duals: y,
                le_duals: z,
                dual_objective,
                ray: None,
                iterations: 0,
            })
        }
        Err(microlp::Error::Infeasible) => {
            let zeros = vec![0.0; p.num_vars()];
            let (yf, zf) = dual(p, &zeros, Some(1.0)).map_err(|e| fail(&format!("farkas: {e}")))?;
            let y = rationalize_all(&yf).ok_or_else(|| fail("farkas not rationalizable"))?;
            let z = rationalize_all(&zf).ok_or_else(|| fail("farkas not rationalizable"))?;
            if !super::verify_infeasibility(p, &y, &z) {
                return Err(fail("farkas vector failed verification"));
            }
            let dual_objective = p.dual_objective(&y, &z);
            Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![Q::zero(); p.num_vars()],
                objective: Q::zero(),
                eq_duals: y,
                le_duals: z,
                dual_objective,
                ray: None,
                iterations: 0,
            })
        }
        Err(e) => Err(fail(&e.to_string())),
    }
}
