//! Getting boundary data onto a grid: polyline ingestion, cycle checks, and
//! pushing chains from a nested finer grid onto a coarser one.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::chain::Chain;
use crate::error::{Error, ParseError, Result};
use crate::grid::{CellComplex, CellKey, Coords};
use crate::rational::{fmt_q, parse_q, sqrt_upper, Q};

/// One closed polyline; the last vertex connects back to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Vec<Q>>,
    /// Integer multiplicity; its sign selects the orientation.
    pub multiplicity: i64,
}

#[derive(Clone, Debug)]
pub enum BoundaryInput {
    Loops(Vec<Polyline>),
    Chain(Chain),
}

impl BoundaryInput {
    /// Parses either `loop mult=<k>` blocks of vertex lines or a chain file.
    pub fn from_text(text: &str) -> Result<Self> {
        let Some(first) = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'))
        else {
            return Ok(BoundaryInput::Loops(Vec::new()));
        };
        if first.starts_with("dim=") {
            return Ok(BoundaryInput::Chain(Chain::from_text(text)?));
        }
        let mut loops: Vec<Polyline> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("loop") {
                let mut multiplicity = 1;
                for tok in rest.split_whitespace() {
                    let v = tok.strip_prefix("mult=").ok_or_else(|| {
                        ParseError::new(format!("line {}: unexpected `{tok}` in loop header", i + 1))
                    })?;
                    multiplicity = v.parse().map_err(|_| {
                        ParseError::new(format!("line {}: bad multiplicity `{v}`", i + 1))
                    })?;
                }
                loops.push(Polyline {
                    vertices: Vec::new(),
                    multiplicity,
                });
                continue;
            }
            let current = loops.last_mut().ok_or_else(|| {
                ParseError::new(format!("line {}: vertex before any `loop` header", i + 1))
            })?;
            let v = line
                .split_whitespace()
                .map(parse_q)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| ParseError::new(format!("line {}: {}", i + 1, e.message)))?;
            if let Some(prev) = current.vertices.first() {
                if prev.len() != v.len() {
                    return Err(ParseError::new(format!(
                        "line {}: vertex has {} coordinates, expected {}",
                        i + 1,
                        v.len(),
                        prev.len()
                    ))
                    .into());
                }
            }
            current.vertices.push(v);
        }
        for (k, l) in loops.iter_mut().enumerate() {
            if l.vertices.len() > 1 && l.vertices.first() == l.vertices.last() {
                l.vertices.pop();
            }
            if l.vertices.len() < 2 {
                return Err(ParseError::new(format!("loop {} has fewer than two vertices", k + 1)).into());
            }
        }
        Ok(BoundaryInput::Loops(loops))
    }

    pub fn to_text(&self) -> String {
        match self {
            BoundaryInput::Chain(c) => c.to_text(),
            BoundaryInput::Loops(loops) => {
                let mut s = String::new();
                for l in loops {
                    s.push_str(&format!("loop mult={}\n", l.multiplicity));
                    for v in &l.vertices {
                        let parts: Vec<String> = v.iter().map(fmt_q).collect();
                        s.push_str(&parts.join(" "));
                        s.push('\n');
                    }
                }
                s
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub cycle: Chain,
    /// Upper bound on the Hausdorff distance between input and output supports.
    pub displacement_bound: Q,
    pub diagnostics: CycleDiagnostics,
}

/// Nearest lattice index, ties toward `-∞`.
fn snap(x: &Q, h: &Q) -> i64 {
    let half = Q::new(BigInt::from(1), BigInt::from(2));
    let v = (x / h - half).ceil().to_integer();
    i64::try_from(v).expect("coordinate out of range")
}

/// Adds the staircase lattice path from `p` to `q` (unit-step edges).
fn staircase(out: &mut Chain, p: &Coords, q: &Coords, mult: i64) {
    let n = p.len();
    // Step j (1-based) along axis k happens at time (2j-1)/(2 n_k); compare
    // times exactly by cross-multiplication, ties to the lower axis.
    let counts: Vec<i64> = (0..n).map(|k| (q[k] - p[k]).abs()).collect();
    let mut events: Vec<(i64, i64, usize)> = Vec::new();
    for k in 0..n {
        for j in 1..=counts[k] {
            events.push((2 * j - 1, 2 * counts[k], k));
        }
    }
    events.sort_by(|a, b| {
        ((a.0 as i128) * (b.1 as i128))
            .cmp(&((b.0 as i128) * (a.1 as i128)))
            .then(a.2.cmp(&b.2))
    });
    let mut cur = p.clone();
    for (_, _, k) in events {
        let step = (q[k] - p[k]).signum();
        let mut next = cur.clone();
        next[k] += step;
        let anchor = if step > 0 { cur.clone() } else { next.clone() };
        out.add_term(
            CellKey::new(&anchor, &[k as u8]),
            Q::from_integer((step * mult).into()),
        );
        cur = next;
    }
}

/// Snaps polylines (in `R^3`) to the lattice and routes each segment as a staircase.
pub fn ingest_boundary(inp: &BoundaryInput, cx: &CellComplex) -> Result<Ingested> {
    let n = cx.dim();
    let h = cx.spacing().clone();
    match inp {
        BoundaryInput::Chain(c) => {
            if c.dim() + 2 != n || c.ambient() != n {
                return Err(Error::Dimension(format!(
                    "boundary chain must be an {}-chain in R^{n}",
                    n - 2
                )));
            }
            let (cycle, displacement_bound) = if c.spacing() == &h {
                (c.clone(), Q::zero())
            } else {
                // Rounding moves each point by at most half a coarse cell per coordinate.
                let quarter_n = Q::new(BigInt::from(n), BigInt::from(4)) * &h * &h;
                (deform_to_grid(c, cx)?.chain, sqrt_upper(&quarter_n, 40))
            };
            if !cycle.lives_on(cx) {
                return Err(Error::Contract("boundary chain leaves the grid box".into()));
            }
            let diagnostics = validate_cycle(&cycle)?;
            Ok(Ingested {
                cycle,
                displacement_bound,
                diagnostics,
            })
        }
        BoundaryInput::Loops(loops) => {
            if n != 3 {
                return Err(Error::Dimension(
                    "polyline input describes 1-cycles, which are boundaries only in R^3".into(),
                ));
            }
            let spec = cx.spec();
            let margin = &h * Q::from_integer(2.into());
            let mut out = Chain::zero(n, 1, h.clone());
            let mut max_snap_sq = Q::zero();
            let mut oblique = false;
            for (li, l) in loops.iter().enumerate() {
                for v in &l.vertices {
                    if v.len() != n {
                        return Err(Error::Dimension(format!(
                            "loop {} has a vertex with {} coordinates",
                            li + 1,
                            v.len()
                        )));
                    }
                    for k in 0..n {
                        if v[k] < &spec.box_min[k] + &margin || v[k] > &spec.box_max[k] - &margin {
                            return Err(Error::Contract(format!(
                                "loop {} leaves the box margin of 2h at coordinate {k}",
                                li + 1
                            )));
                        }
                    }
                }
                let snapped: Vec<Coords> = l
                    .vertices
                    .iter()
                    .map(|v| v.iter().map(|x| snap(x, &h)).collect())
                    .collect();
                for (v, s) in l.vertices.iter().zip(&snapped) {
                    let d2: Q = (0..n)
                        .map(|k| {
                            let d = &v[k] - Q::from_integer(s[k].into()) * &h;
                            &d * &d
                        })
                        .sum();
                    if d2 > max_snap_sq {
                        max_snap_sq = d2;
                    }
                }
                let m = snapped.len();
                for i in 0..m {
                    let (p, q) = (&snapped[i], &snapped[(i + 1) % m]);
                    let moving = (0..n).filter(|&k| p[k] != q[k]).count();
                    if moving > 1 {
                        oblique = true;
                    }
                    staircase(&mut out, p, q, l.multiplicity);
                }
            }
            if out.is_zero() && !loops.is_empty() {
                return Err(Error::Degenerate(
                    "every loop collapsed to nothing after snapping to the grid".into(),
                ));
            }
            let diagnostics = validate_cycle(&out)?;
            let mut bound = sqrt_upper(&max_snap_sq, 40);
            if oblique {
                // A staircase stays within half a cell per coordinate of its segment.
                let quarter_n = Q::new(BigInt::from(n), BigInt::from(4)) * &h * &h;
                bound += sqrt_upper(&quarter_n, 40);
            }
            Ok(Ingested {
                cycle: out,
                displacement_bound: bound,
                diagnostics,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct CycleDiagnostics {
    pub mass: Q,
    /// Lower and upper corners of the support's bounding box.
    pub bbox: Option<(Vec<Q>, Vec<Q>)>,
    pub components: usize,
    pub max_multiplicity: Q,
    pub warnings: Vec<String>,
}

/// Checks `∂B = 0` and summarizes the cycle.
pub fn validate_cycle(b: &Chain) -> Result<CycleDiagnostics> {
    if b.dim() > 0 {
        let bd = b.boundary()?;
        if !bd.is_zero() {
            return Err(Error::NotACycle {
                offending: bd.support().iter().map(CellKey::to_string).collect(),
            });
        }
    }
    let h = b.spacing().clone();
    let n = b.ambient();
    let mut bbox: Option<(Coords, Coords)> = None;
    for k in b.coeffs().keys() {
        let (lo, hi) = k.lattice_box();
        bbox = Some(match bbox {
            None => (lo, hi),
            Some((a, c)) => (
                (0..n).map(|i| a[i].min(lo[i])).collect(),
                (0..n).map(|i| c[i].max(hi[i])).collect(),
            ),
        });
    }
    let to_q = |v: &Coords| -> Vec<Q> { v.iter().map(|x| Q::from_integer((*x).into()) * &h).collect() };
    let max_multiplicity = b.max_abs();
    let mut warnings = Vec::new();
    if max_multiplicity > Q::from_integer(1.into()) {
        warnings.push(format!(
            "cycle has multiplicity up to {}; guarantees are stated for smooth multiplicity-one boundaries",
            fmt_q(&max_multiplicity)
        ));
    }
    Ok(CycleDiagnostics {
        mass: b.mass(),
        bbox: bbox.map(|(lo, hi)| (to_q(&lo), to_q(&hi))),
        components: components(b),
        max_multiplicity,
        warnings,
    })
}

/// Number of connected components of the support (cells sharing a vertex are connected).
fn components(b: &Chain) -> usize {
    let cells: Vec<&CellKey> = b.coeffs().keys().collect();
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut by_vertex: HashMap<Coords, usize> = HashMap::new();
    for (i, c) in cells.iter().enumerate() {
        let (lo, hi) = c.lattice_box();
        let free: Vec<usize> = (0..lo.len()).filter(|&k| lo[k] != hi[k]).collect();
        for mask in 0..(1u32 << free.len()) {
            let mut v = lo.clone();
            for (bit, &k) in free.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    v[k] = hi[k];
                }
            }
            match by_vertex.get(&v) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
                None => {
                    by_vertex.insert(v, i);
                }
            }
        }
    }
    let roots: BTreeSet<usize> = (0..cells.len()).map(|i| find(&mut parent, i)).collect();
    roots.len()
}

#[derive(Clone, Debug)]
pub struct Deformed {
    pub chain: Chain,
    /// `M(output) / M(input)`, absent for the zero chain.
    pub mass_factor: Option<Q>,
    /// `∂(output) - push(∂ input)`; zero because the map is cellular.
    pub boundary_error: Chain,
}

/// Coarse lattice index for a fine index under a `2^levels` refinement,
/// rounding to nearest with ties toward `-∞`.
fn coarsen_index(v: i64, factor: i64) -> i64 {
    // ceil(v / factor - 1/2) = ceil((2v - factor) / (2 factor))
    let num = 2 * v - factor;
    let den = 2 * factor;
    -((-num).div_euclid(den))
}

/// Pushes a chain through the rounding map `x ↦ round(x / h_coarse)`.
fn push_forward(t: &Chain, factor: i64, coarse_h: &Q) -> Chain {
    let mut out = Chain::zero(t.ambient(), t.dim(), coarse_h.clone());
    for (k, v) in t.iter() {
        let anchor: Coords = k.anchor.iter().map(|&a| coarsen_index(a, factor)).collect();
        let mut degenerate = false;
        for &a in &k.axes {
            let a = a as usize;
            if coarsen_index(k.anchor[a] + 1, factor) == anchor[a] {
                degenerate = true;
                break;
            }
        }
        if !degenerate {
            out.add_term(
                CellKey {
                    anchor,
                    axes: k.axes.clone(),
                },
                v.clone(),
            );
        }
    }
    out
}

/// Moves a chain from a nested finer grid onto `cx`.
///
/// The map rounds every lattice point to the nearest coarse lattice point
/// (ties toward `-∞`); it is cellular, so it commutes with `∂` exactly, it
/// inverts subdivision, and a `k`-chain's mass grows by at most `2^k` per
/// halving level.
pub fn deform_to_grid(t: &Chain, cx: &CellComplex) -> Result<Deformed> {
    let coarse_h = cx.spacing();
    let ratio = coarse_h / t.spacing();
    let factor = if ratio.is_integer() {
        i64::try_from(ratio.to_integer()).ok()
    } else {
        None
    };
    let factor = match factor {
        Some(f) if f >= 1 && (f as u64).is_power_of_two() => f,
        _ => {
            return Err(Error::Contract(format!(
                "grids are not nested: h = {} does not refine h = {} by a power of two",
                fmt_q(t.spacing()),
                fmt_q(coarse_h)
            )))
        }
    };
    if t.ambient() != cx.dim() {
        return Err(Error::Dimension("chain and complex have different ambient dimension".into()));
    }
    let chain = push_forward(t, factor, coarse_h);
    if !chain.lives_on(cx) {
        return Err(Error::Contract("deformed chain leaves the grid box".into()));
    }
    let boundary_error = if t.dim() > 0 {
        let pushed_boundary = push_forward(&t.boundary()?, factor, coarse_h);
        chain.boundary()?.sub(&pushed_boundary)?
    } else {
        Chain::zero(t.ambient(), 0, coarse_h.clone())
    };
    let mass_factor = if t.is_zero() {
        None
    } else {
        Some(chain.mass() / t.mass())
    };
    Ok(Deformed {
        chain,
        mass_factor,
        boundary_error,
    })
}

/// Support cells grouped by multiplicity, for reporting.
pub fn multiplicity_histogram(b: &Chain) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for v in b.coeffs().values() {
        *out.entry(fmt_q(&v.abs())).or_insert(0) += 1;
    }
    out
}
