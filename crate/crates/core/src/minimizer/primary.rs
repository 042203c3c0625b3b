//! Primary minimization: near-minimal `T` with `∂(S + T) = B` and a small bridge `S`.
//!
//! The program is solved on the bounding box of `spt B` (the hull), and its dual
//! is pulled back through the clamp onto the hull. The clamp is a cellular chain
//! map fixing `spt B`, so the pulled-back dual is feasible for the full-box
//! program; this is rechecked exactly, face by face.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::flatnorm::{fill_top, sweep_filling};
use crate::grid::{measure, CellComplex, CellKey, Coords, GridSpec};
use crate::lp::{solve_lp_with, LinearProgram, LpOptions, LpStatus};
use crate::rational::Q;
use crate::region::{hausdorff_distance, DistanceField, Hausdorff, Region};

use super::region_k::{cell_range, for_each_cell};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub lp_iterations: usize,
    pub cell_limit: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            lp_iterations: 200_000,
            cell_limit: crate::grid::DEFAULT_CELL_LIMIT,
        }
    }
}

/// Result of a hull program with its full-box certificate.
#[derive(Clone, Debug)]
pub struct CertifiedProgram {
    pub t: Chain,
    pub s: Chain,
    /// Mass of the LP optimum's `T` (before any rounding).
    pub lp_mass: Q,
    /// Certified lower bound for the full-box program, in mass units.
    pub lower_bound: Q,
    pub iterations: usize,
    pub hull: GridSpec,
}

/// A posteriori membership checks for `(T, S)`.
#[derive(Clone, Debug)]
pub struct Membership {
    pub boundary_identity: bool,
    pub bridge_mass_below: bool,
    pub bridge_near_boundary: bool,
    pub boundary_near_boundary: bool,
    pub boundary_in_u: bool,
}

impl Membership {
    pub fn passed(&self) -> bool {
        self.boundary_identity
            && self.bridge_mass_below
            && self.bridge_near_boundary
            && self.boundary_near_boundary
            && self.boundary_in_u
    }
}

#[derive(Clone, Debug)]
pub struct PrimaryOutcome {
    pub t: Chain,
    pub s: Chain,
    pub lp_mass: Q,
    pub lower_bound: Q,
    pub integral: bool,
    pub rounded: bool,
    pub membership: Membership,
    pub iterations: usize,
}

/// `(lo, hi)` lattice box of the hull of `spt B` inside the grid box.
fn hull_spec(b: &Chain, spec: &GridSpec) -> Result<GridSpec> {
    let n = spec.dim;
    let bmin = spec.lattice_min();
    let bmax = spec.lattice_max();
    let mut lo: Coords = bmax.clone();
    let mut hi: Coords = bmin.clone();
    for (k, _) in b.iter() {
        if !spec.contains(k) {
            return Err(Error::Contract(format!("boundary cell {k} lies outside the grid box")));
        }
        let (a, z) = k.lattice_box();
        for j in 0..n {
            lo[j] = lo[j].min(a[j]);
            hi[j] = hi[j].max(z[j]);
        }
    }
    for j in 0..n {
        if lo[j] == hi[j] {
            if lo[j] > bmin[j] {
                lo[j] -= 1;
            }
            if hi[j] < bmax[j] {
                hi[j] += 1;
            }
        }
    }
    let h = &spec.spacing;
    let to_q = |v: &Coords| v.iter().map(|&x| Q::from_integer(x.into()) * h).collect();
    GridSpec::new(n, to_q(&lo), to_q(&hi), h.clone())
}

/// Image of a cell under the coordinate clamp onto the hull; `None` if degenerate.
fn clamp_cell(key: &CellKey, lo: &Coords, hi: &Coords) -> Option<CellKey> {
    let mut anchor = key.anchor.clone();
    for j in 0..anchor.len() {
        let a = key.anchor[j].clamp(lo[j], hi[j]);
        if key.spans(j) {
            let b = (key.anchor[j] + 1).clamp(lo[j], hi[j]);
            if a == b {
                return None;
            }
        }
        anchor[j] = a;
    }
    Some(CellKey {
        anchor,
        axes: key.axes.clone(),
    })
}

/// Faces of the full box certainly inside `I(radius)` of `spt B`.
fn eligible_faces(field: &DistanceField, radius: &Q, spec: &GridSpec) -> BTreeSet<CellKey> {
    let h = &spec.spacing;
    let (lo, hi) = cell_range(field, radius, spec);
    let mut faces = BTreeSet::new();
    for_each_cell(&lo, &hi, |cell| {
        for (f, _) in cell.faces() {
            faces.insert(f);
        }
    });
    faces
        .into_iter()
        .filter(|f| spec.contains(f) && field.cell_within(f, h, radius))
        .collect()
}

fn unit() -> Q {
    Q::one()
}

/// `min M(T)` over `∂(T + S) = B` with `S` on faces in `I(radius)` and
/// `M(S) <= cap`; without a bridge when `bridge` is `None`. `budget` is the
/// accepted optimality gap in mass units.
pub fn solve_certified(
    b: &Chain,
    spec: &GridSpec,
    bridge: Option<(&Q, &Q)>,
    budget: &Q,
    opts: &SolveOptions,
) -> Result<CertifiedProgram> {
    solve_hull_program(b, spec, bridge, budget, opts, true)
}

fn solve_hull_program(
    b: &Chain,
    spec: &GridSpec,
    bridge: Option<(&Q, &Q)>,
    budget: &Q,
    opts: &SolveOptions,
    lift: bool,
) -> Result<CertifiedProgram> {
    let n = spec.dim;
    let h = spec.spacing.clone();
    if b.ambient() != n || b.dim() + 2 != n {
        return Err(Error::Dimension(format!("expected an {}-cycle in R^{n}", n - 2)));
    }
    if b.is_zero() {
        return Ok(CertifiedProgram {
            t: Chain::zero(n, n - 1, h.clone()),
            s: Chain::zero(n, n - 1, h.clone()),
            lp_mass: Q::zero(),
            lower_bound: Q::zero(),
            iterations: 0,
            hull: spec.clone(),
        });
    }
    let hull = hull_spec(b, spec)?;
    let cx = CellComplex::build(&hull, opts.cell_limit)?;
    let (hlo, hhi) = (hull.lattice_min(), hull.lattice_max());
    let field = DistanceField::of_chain(b);

    let (full_eligible, hull_eligible) = match bridge {
        Some((radius, _)) => {
            let bracket = eligible_faces(&field, radius, spec);
            let images: BTreeSet<CellKey> = bracket.iter().filter_map(|f| clamp_cell(f, &hlo, &hhi)).collect();
            let full: BTreeSet<CellKey> = bracket.union(&images).cloned().collect();
            (full, images)
        }
        None => (BTreeSet::new(), BTreeSet::new()),
    };

    let faces = cx.cells(n - 1);
    let ridges = cx.cells(n - 2);
    let scale = measure(&h, n - 1);
    let mut lp = LinearProgram::new();
    for f in faces {
        lp.add_var(format!("t+ {f}"), unit());
        lp.add_var(format!("t- {f}"), unit());
    }
    let s0 = lp.num_vars();
    let bridge_faces: Vec<&CellKey> = hull_eligible.iter().collect();
    for f in &bridge_faces {
        lp.add_var(format!("s+ {f}"), Q::zero());
        lp.add_var(format!("s- {f}"), Q::zero());
    }
    let mut rows: Vec<Vec<(usize, Q)>> = vec![Vec::new(); ridges.len()];
    let d = cx.boundary_matrix(n - 1)?;
    for (fi, col) in d.entries.iter().enumerate() {
        for &(ri, sg) in col {
            let sg = Q::from_integer(i64::from(sg).into());
            rows[ri].push((2 * fi, sg.clone()));
            rows[ri].push((2 * fi + 1, -sg));
        }
    }
    for (si, f) in bridge_faces.iter().enumerate() {
        for (r, sg) in f.faces() {
            let ri = cx
                .index_of(&r)
                .ok_or_else(|| Error::Contract(format!("bridge face {f} leaves the hull")))?;
            let sg = Q::from_integer(i64::from(sg).into());
            rows[ri].push((s0 + 2 * si, sg.clone()));
            rows[ri].push((s0 + 2 * si + 1, -sg));
        }
    }
    for (r, row) in ridges.iter().zip(rows) {
        lp.add_eq(row, b.coeff(r));
    }
    let cap_scaled = bridge.map(|(_, cap)| cap / &scale);
    if let Some(cap) = &cap_scaled {
        let row = (s0..lp.num_vars()).map(|j| (j, Q::one())).collect();
        lp.add_le(row, cap.clone());
    }
    let sol = solve_lp_with(
        &lp,
        &LpOptions {
            budget: budget / &scale,
            iteration_limit: opts.lp_iterations,
            ..Default::default()
        },
    )?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Contract(
            "primary program is not feasible although a sweep filling exists".into(),
        ));
    }

    // Pull the dual back to the full box and verify it there.
    let z = cap_scaled.as_ref().map(|_| sol.le_duals[0].clone()).unwrap_or_else(Q::zero);
    let y: HashMap<&CellKey, &Q> = ridges
        .iter()
        .zip(&sol.eq_duals)
        .filter(|(_, v)| !v.is_zero())
        .collect();
    if lift && spec.stored_cell_count() > opts.cell_limit {
        return Err(Error::CellLimit {
            count: spec.stored_cell_count(),
            limit: opts.cell_limit,
        });
    }
    let neg_z = -z.clone();
    let full_faces = if lift { spec.cells(n - 1) } else { Vec::new() };
    for f in full_faces {
        let mut g = Q::zero();
        for (r, sg) in f.faces() {
            if let Some(c) = clamp_cell(&r, &hlo, &hhi) {
                if let Some(v) = y.get(&c) {
                    if sg > 0 {
                        g += *v;
                    } else {
                        g -= *v;
                    }
                }
            }
        }
        let g = g.abs();
        if g > Q::one() || (full_eligible.contains(&f) && g > neg_z) {
            return Err(Error::Certification(format!(
                "lifted dual is infeasible on face {f}"
            )));
        }
    }
    let mut dual = Q::zero();
    for (r, v) in &y {
        dual += b.coeff(r) * *v;
    }
    if let Some(cap) = &cap_scaled {
        dual += cap * &z;
    }
    if dual != sol.dual_objective {
        return Err(Error::Certification("lifted dual objective differs".into()));
    }

    let mut t = Chain::zero(n, n - 1, h.clone());
    for (i, f) in faces.iter().enumerate() {
        t.add_term(f.clone(), &sol.x[2 * i] - &sol.x[2 * i + 1]);
    }
    let mut s = Chain::zero(n, n - 1, h.clone());
    for (i, f) in bridge_faces.iter().enumerate() {
        s.add_term((*f).clone(), &sol.x[s0 + 2 * i] - &sol.x[s0 + 2 * i + 1]);
    }
    if t.add(&s)?.boundary()? != *b {
        return Err(Error::Contract("primary solution violates the boundary identity".into()));
    }
    Ok(CertifiedProgram {
        lp_mass: t.mass(),
        t,
        s,
        lower_bound: dual * scale,
        iterations: sol.iterations,
        hull,
    })
}

/// Integral `(T, S)` with the same `∂(T + S)` and `|S_f| <= |S'_f|`.
pub fn round_to_integral(t: &Chain, s: &Chain, b: &Chain, hull: &GridSpec, cell_limit: u64) -> Result<(Chain, Chain)> {
    let cx = CellComplex::build(hull, cell_limit)?;
    let mut s_r = Chain::zero(s.ambient(), s.dim(), s.spacing().clone());
    for (k, v) in s.iter() {
        s_r.add_term(k.clone(), v.trunc());
    }
    let p = t.add(s)?;
    let p0 = sweep_filling(b, &cx)?;
    let w = fill_top(&p.sub(&p0)?, &cx)?;
    let mut w_r = Chain::zero(w.ambient(), w.dim(), w.spacing().clone());
    for (k, v) in w.iter() {
        w_r.add_term(k.clone(), v.round());
    }
    let p_r = p0.add(&w_r.boundary()?)?;
    let t_r = p_r.sub(&s_r)?;
    debug_assert_eq!(t_r.add(&s_r)?.boundary()?, *b);
    Ok((t_r, s_r))
}

/// Whether both supports are within `r` of each other (vacuous when both are empty).
fn supports_close(a: &Chain, b: &Chain, r: &Q) -> bool {
    let fa = DistanceField::of_chain(a);
    let fb = DistanceField::of_chain(b);
    if fa.is_empty() && fb.is_empty() {
        return true;
    }
    if fa.is_empty() || fb.is_empty() {
        return false;
    }
    fa.cells().iter().all(|c| fb.cell_within(c, a.spacing(), r))
        && fb.cells().iter().all(|c| fa.cell_within(c, b.spacing(), r))
}

/// Rechecks `∂(S + T) = B`, `M(S) < ε_i`, both Hausdorff conditions and `spt ∂T ⊂ U`.
pub fn check_membership(t: &Chain, s: &Chain, b: &Chain, eps: &Q, u: &Region) -> Result<Membership> {
    let dt = t.boundary()?;
    let h = t.spacing().clone();
    let boundary_in_u = dt.iter().all(|(k, _)| u.contains_cell(k, &h));
    Ok(Membership {
        boundary_identity: t.add(s)?.boundary()? == *b,
        bridge_mass_below: s.mass() < *eps,
        bridge_near_boundary: s.is_zero() || supports_close(s, b, eps),
        boundary_near_boundary: supports_close(&dt, b, eps),
        boundary_in_u,
    })
}

/// Hausdorff bracket between `spt ∂T` and `spt B`.
pub fn boundary_hausdorff(t: &Chain, b: &Chain) -> Result<Hausdorff> {
    let dt = t.boundary()?;
    Ok(hausdorff_distance(
        &DistanceField::of_chain(&dt),
        &DistanceField::of_chain(b),
    ))
}

fn finish(
    prog: &CertifiedProgram,
    b: &Chain,
    eps: &Q,
    u: &Region,
    opts: &SolveOptions,
) -> Result<(Chain, Chain, bool, Membership)> {
    let (mut t, mut s, mut rounded) = (prog.t.clone(), prog.s.clone(), false);
    if !(t.is_integral() && s.is_integral()) {
        let (t_r, s_r) = round_to_integral(&prog.t, &prog.s, b, &prog.hull, opts.cell_limit)?;
        if t_r.mass() <= &prog.lp_mass + eps {
            t = t_r;
            s = s_r;
            rounded = true;
        }
    }
    let membership = check_membership(&t, &s, b, eps, u)?;
    Ok((t, s, rounded, membership))
}

/// Primary step at tolerance `eps`: bridge mass cap `eps - eps/16`, budget `eps`.
///
/// The bound comes from the program with the bridge anywhere in `I(eps)`.
/// When its optimum fails the two-sided membership checks, the program is
/// re-solved with the bridge confined to `I(eps/2)`, which keeps `spt ∂T`
/// close to all of `spt B`; that answer is kept if it is still within
/// `eps` of the bound.
pub fn minimize_primary(b: &Chain, spec: &GridSpec, eps: &Q, u: &Region, opts: &SolveOptions) -> Result<PrimaryOutcome> {
    let slack = eps / Q::from_integer(16.into());
    let cap = eps - &slack;
    let prog = solve_certified(b, spec, Some((eps, &cap)), eps, opts)?;
    let mut iterations = prog.iterations;
    let mut lp_mass = prog.lp_mass.clone();
    let (mut t, mut s, mut rounded, mut membership) = finish(&prog, b, eps, u, opts)?;
    let within_bound = |t: &Chain| t.mass() <= &prog.lower_bound + eps;
    if !membership.passed() || !within_bound(&t) {
        let half = eps / Q::from_integer(2.into());
        let narrow = solve_hull_program(b, spec, Some((&half, &cap)), eps, opts, false)?;
        iterations += narrow.iterations;
        let (t2, s2, r2, m2) = finish(&narrow, b, eps, u, opts)?;
        if m2.passed() && within_bound(&t2) {
            (t, s, rounded, membership) = (t2, s2, r2, m2);
            lp_mass = narrow.lp_mass;
        }
    }
    Ok(PrimaryOutcome {
        integral: t.is_integral() && s.is_integral(),
        t,
        s,
        lp_mass,
        lower_bound: prog.lower_bound,
        rounded,
        membership,
        iterations,
    })
}

/// Certified minimal mass `min { M(T) : ∂T = B }` on the grid, with a minimizer.
pub fn grid_minimal_mass(b: &Chain, spec: &GridSpec, opts: &SolveOptions) -> Result<CertifiedProgram> {
    solve_certified(b, spec, None, &Q::zero(), opts)
}

/// The field of a chain's support, shared.
pub(crate) fn shared_field(c: &Chain) -> Arc<DistanceField> {
    Arc::new(DistanceField::of_chain(c))
}
