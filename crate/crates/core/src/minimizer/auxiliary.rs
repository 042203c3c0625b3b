//! Auxiliary minimization over competitors far from `T'` in filling volume.
//!
//! Variables: `Q = q⁺ - q⁻` on every face, the bridge `S' = s⁺ - s⁻` on faces in
//! `I(ε_i)` of `spt B_i`, and the filling `W = w⁺ - w⁻` on every `N`-cell, tied
//! by `∂W + Q + S' = T'` face by face. The reverse constraint
//! `M(W) >= ε/2` needs one sign binary per `N`-cell.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::grid::{measure, CellComplex, CellKey};
use crate::lp::{solve_reverse_milp, LinearProgram, LpStatus, MilpProblem};
use crate::rational::{fmt_q, Q};
use crate::region::DistanceField;

/// Outcome of the auxiliary minimization, in mass units.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuxiliaryMass {
    Value(Q),
    /// The class is empty.
    Infeasible,
    /// No competitor has mass below the cap.
    AboveCap(Q),
}

impl AuxiliaryMass {
    /// Whether `M(Q_i) >= threshold` holds for every admissible choice of `Q_i`.
    pub fn at_least(&self, threshold: &Q) -> bool {
        match self {
            AuxiliaryMass::Value(v) => v >= threshold,
            AuxiliaryMass::Infeasible => true,
            AuxiliaryMass::AboveCap(cap) => cap >= threshold,
        }
    }
}

impl fmt::Display for AuxiliaryMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuxiliaryMass::Value(v) => write!(f, "{}", fmt_q(v)),
            AuxiliaryMass::Infeasible => write!(f, "inf"),
            AuxiliaryMass::AboveCap(c) => write!(f, ">{}", fmt_q(c)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct AuxiliaryOutcome {
    pub mass: AuxiliaryMass,
    pub q: Option<Chain>,
    pub bridge: Option<Chain>,
    pub filling: Option<Chain>,
    pub cap: Q,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub root_infeasible: bool,
}

#[derive(Clone, Debug)]
pub struct AuxiliaryOptions {
    pub node_limit: usize,
    /// Upper bound on `M(Q)` relative to `M(T')`: `cap = M(T') + cap_margin`.
    pub cap_margin: Q,
}

/// Index of the axis with the fewest cells, used for column cuts.
fn shortest_axis(cx: &CellComplex) -> usize {
    let per = cx.spec().cells_per_axis();
    (0..per.len()).min_by_key(|&k| (per[k], k)).unwrap_or(0)
}

/// The face between `cell` and its neighbor one step along `axis` (below when `up` is false).
fn column_face(cell: &CellKey, axis: usize, upper: bool) -> CellKey {
    let axes: Vec<u8> = cell.axes.iter().copied().filter(|&a| a as usize != axis).collect();
    let mut anchor = cell.anchor.clone();
    if upper {
        anchor[axis] += 1;
    }
    CellKey::new(&anchor, &axes)
}

/// Solves the auxiliary program for `T'` with tolerance `eps_i` and threshold `epsilon / 2`.
pub fn minimize_auxiliary(
    t_prime: &Chain,
    cx: &CellComplex,
    eps_i: &Q,
    epsilon: &Q,
    opts: &AuxiliaryOptions,
) -> Result<AuxiliaryOutcome> {
    let n = cx.dim();
    let h = cx.spacing().clone();
    if t_prime.ambient() != n || t_prime.dim() + 1 != n {
        return Err(Error::Dimension("T' must be an (N-1)-chain".into()));
    }
    if !t_prime.lives_on(cx) {
        return Err(Error::Contract("T' does not live on the auxiliary grid".into()));
    }
    let scale = measure(&h, n - 1);
    let volume = measure(&h, n);
    let b_i = t_prime.boundary()?;
    let field = DistanceField::of_chain(&b_i);
    let slack = eps_i / Q::from_integer(16.into());
    let bridge_cap = (eps_i - &slack) / &scale;
    let cap = t_prime.mass() + &opts.cap_margin;
    let q_cap = &cap / &scale;

    let faces = cx.cells(n - 1);
    let cubes = cx.cells(n);
    let mut lp = LinearProgram::new();
    for f in faces {
        lp.add_var(format!("q+ {f}"), Q::one());
        lp.add_var(format!("q- {f}"), Q::one());
    }
    let bridge_faces: Vec<usize> = (0..faces.len())
        .filter(|&i| field.cell_within(&faces[i], &h, eps_i))
        .collect();
    let s0 = lp.num_vars();
    let mut bridge_var = vec![None; faces.len()];
    for (k, &fi) in bridge_faces.iter().enumerate() {
        lp.add_var(format!("s+ {}", faces[fi]), Q::zero());
        lp.add_var(format!("s- {}", faces[fi]), Q::zero());
        bridge_var[fi] = Some(s0 + 2 * k);
    }
    let w0 = lp.num_vars();
    for c in cubes {
        lp.add_var(format!("w+ {c}"), Q::zero());
        lp.add_var(format!("w- {c}"), Q::zero());
    }
    let mut rows: Vec<Vec<(usize, Q)>> = (0..faces.len())
        .map(|i| {
            let mut r = vec![(2 * i, Q::one()), (2 * i + 1, -Q::one())];
            if let Some(j) = bridge_var[i] {
                r.push((j, Q::one()));
                r.push((j + 1, -Q::one()));
            }
            r
        })
        .collect();
    let d = cx.boundary_matrix(n)?;
    for (ci, col) in d.entries.iter().enumerate() {
        for &(fi, sg) in col {
            let sg = Q::from_integer(i64::from(sg).into());
            rows[fi].push((w0 + 2 * ci, sg.clone()));
            rows[fi].push((w0 + 2 * ci + 1, -sg));
        }
    }
    for (f, row) in faces.iter().zip(rows) {
        lp.add_eq(row, t_prime.coeff(f));
    }
    if !bridge_faces.is_empty() {
        lp.add_le((s0..w0).map(|j| (j, Q::one())).collect(), bridge_cap.clone());
    }
    lp.add_le((0..s0).map(|j| (j, Q::one())).collect(), q_cap.clone());
    let threshold = epsilon / Q::from_integer(2.into()) / &volume;
    lp.add_ge(
        (w0..w0 + 2 * cubes.len()).map(|j| (j, Q::one())).collect(),
        threshold,
    );

    // Column cuts along the shortest axis, from both ends of the box.
    let axis = shortest_axis(cx);
    let mut sorted: Vec<usize> = (0..cubes.len()).collect();
    sorted.sort_by_key(|&ci| {
        let a = &cubes[ci].anchor;
        let rest: Vec<i64> = (0..n).filter(|&k| k != axis).map(|k| a[k]).collect();
        (rest, a[axis])
    });
    let face_terms = |fi: usize| -> Vec<(usize, Q)> {
        let mut t = vec![(2 * fi, -Q::one()), (2 * fi + 1, -Q::one())];
        if let Some(j) = bridge_var[fi] {
            t.push((j, -Q::one()));
            t.push((j + 1, -Q::one()));
        }
        t
    };
    let mut column_bound = vec![Q::zero(); cubes.len()];
    for upper in [false, true] {
        let order: Vec<usize> = if upper { sorted.iter().rev().copied().collect() } else { sorted.clone() };
        let mut acc_terms: Vec<(usize, Q)> = Vec::new();
        let mut acc_rhs = Q::zero();
        let mut prev: Option<&CellKey> = None;
        for &ci in &order {
            let c = &cubes[ci];
            let same_column = prev.is_some_and(|p| {
                (0..n).all(|k| k == axis || p.anchor[k] == c.anchor[k])
            });
            if !same_column {
                acc_terms.clear();
                acc_rhs = Q::zero();
            }
            let f = column_face(c, axis, upper);
            let fi = cx
                .index_of(&f)
                .ok_or_else(|| Error::Contract(format!("column face {f} missing")))?;
            acc_terms.extend(face_terms(fi));
            acc_rhs += t_prime.coeff(&f).abs();
            let mut row = vec![(w0 + 2 * ci, Q::one()), (w0 + 2 * ci + 1, Q::one())];
            row.extend(acc_terms.iter().cloned());
            lp.add_le(row, acc_rhs.clone());
            if acc_rhs > column_bound[ci] {
                column_bound[ci] = acc_rhs.clone();
            }
            prev = Some(c);
        }
    }

    let mut milp = MilpProblem::new(lp);
    milp.node_limit = opts.node_limit;
    // Chains are integral; `Q` follows from `S'` and `W` through the face rows.
    milp.integers = (s0..w0 + 2 * cubes.len()).collect();
    let extra = &q_cap + if bridge_faces.is_empty() { Q::zero() } else { bridge_cap.clone() };
    for (ci, c) in cubes.iter().enumerate() {
        let big_m = &column_bound[ci] + &extra;
        milp.link_signs(
            w0 + 2 * ci,
            w0 + 2 * ci + 1,
            big_m,
            format!("|W({c})| <= column sum of |T'| plus the Q and S' caps"),
        );
    }
    let sol = solve_reverse_milp(&milp, &(eps_i / &scale))?;
    match sol.status {
        LpStatus::Optimal => {
            let mut q = Chain::zero(n, n - 1, h.clone());
            for (i, f) in faces.iter().enumerate() {
                q.add_term(f.clone(), &sol.x[2 * i] - &sol.x[2 * i + 1]);
            }
            let mut bridge = Chain::zero(n, n - 1, h.clone());
            for (k, &fi) in bridge_faces.iter().enumerate() {
                bridge.add_term(faces[fi].clone(), &sol.x[s0 + 2 * k] - &sol.x[s0 + 2 * k + 1]);
            }
            let mut w = Chain::zero(n, n, h.clone());
            for (ci, c) in cubes.iter().enumerate() {
                w.add_term(c.clone(), &sol.x[w0 + 2 * ci] - &sol.x[w0 + 2 * ci + 1]);
            }
            if w.boundary()? != t_prime.sub(&bridge)?.sub(&q)? {
                return Err(Error::Contract("auxiliary filling identity fails".into()));
            }
            if w.mass() * Q::from_integer(2.into()) < *epsilon {
                return Err(Error::Contract("auxiliary filling volume below threshold".into()));
            }
            Ok(AuxiliaryOutcome {
                mass: AuxiliaryMass::Value(q.mass()),
                q: Some(q),
                bridge: Some(bridge),
                filling: Some(w),
                cap,
                nodes: sol.nodes,
                lp_iterations: sol.lp_iterations,
                root_infeasible: false,
            })
        }
        LpStatus::Infeasible => Ok(AuxiliaryOutcome {
            mass: AuxiliaryMass::AboveCap(cap.clone()),
            q: None,
            bridge: None,
            filling: None,
            cap,
            nodes: sol.nodes,
            lp_iterations: sol.lp_iterations,
            root_infeasible: sol.root_infeasible,
        }),
        LpStatus::Unbounded => Err(Error::Contract("auxiliary program is unbounded".into())),
    }
}
