//! Grid-aligned regions, distances to chain supports, Hausdorff distance.
//!
//! Distances are computed exactly: every cell is an axis-aligned box with
//! lattice corners, so squared point-to-box and box-to-box distances are
//! integers in a common length unit. Suprema over a cell (which need not be
//! attained at a vertex when the target set is a union of boxes) are
//! bracketed by an interval that tightens under subdivision.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::grid::{CellComplex, CellKey, Coords, GridSpec};
use crate::rational::{sqrt_lt, Q};

/// Subdivision depth used when bracketing a supremum of distance.
const SUP_DEPTH: u32 = 6;

/// Exact bracket `lower_sq <= d^2 <= upper_sq`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistBound {
    pub lower_sq: Q,
    pub upper_sq: Q,
}

impl DistBound {
    pub fn is_exact(&self) -> bool {
        self.lower_sq == self.upper_sq
    }

    /// Certainly `d < r`.
    pub fn below(&self, r: &Q) -> bool {
        sqrt_lt(&self.upper_sq, r)
    }
}

/// Lengths `field_h` and `query_h` expressed as integer multiples of one unit.
#[derive(Clone, Debug)]
struct Units {
    field_mul: i64,
    query_mul: i64,
    unit: Q,
}

fn common_units(field_h: &Q, query_h: &Q) -> Units {
    // gcd of two positive rationals a/b, c/d is gcd(ad, cb)/(bd).
    let (a, b) = (field_h.numer(), field_h.denom());
    let (c, d) = (query_h.numer(), query_h.denom());
    let g = (a * d).gcd(&(c * b));
    let unit = Q::new(g, b * d);
    let to_i64 = |x: Q| -> i64 {
        let x = x.to_integer();
        i64::try_from(x).expect("grid spacing ratio out of range")
    };
    Units {
        field_mul: to_i64(field_h / &unit),
        query_mul: to_i64(query_h / &unit),
        unit,
    }
}

type IBox = (Coords, Coords);

fn scaled_box(key: &CellKey, mul: i64) -> IBox {
    let (lo, hi) = key.lattice_box();
    (
        lo.iter().map(|x| x * mul).collect(),
        hi.iter().map(|x| x * mul).collect(),
    )
}

fn point_box_sq(p: &[i64], b: &IBox) -> i128 {
    let mut s = 0i128;
    for k in 0..p.len() {
        let g = if p[k] < b.0[k] {
            b.0[k] - p[k]
        } else if p[k] > b.1[k] {
            p[k] - b.1[k]
        } else {
            0
        };
        s += (g as i128) * (g as i128);
    }
    s
}

fn box_box_sq(a: &IBox, b: &IBox) -> i128 {
    let mut s = 0i128;
    for k in 0..a.0.len() {
        let g = (b.0[k] - a.1[k]).max(a.0[k] - b.1[k]).max(0);
        s += (g as i128) * (g as i128);
    }
    s
}

fn box_within(inner: &IBox, outer: &IBox) -> bool {
    (0..inner.0.len()).all(|k| outer.0[k] <= inner.0[k] && inner.1[k] <= outer.1[k])
}

fn box_vertices(b: &IBox) -> Vec<Coords> {
    let n = b.0.len();
    let free: Vec<usize> = (0..n).filter(|&k| b.0[k] != b.1[k]).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0..(1u32 << free.len()) {
        let mut v = b.0.clone();
        for (bit, &k) in free.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                v[k] = b.1[k];
            }
        }
        out.push(v);
    }
    out
}

fn split_box(b: &IBox) -> Vec<IBox> {
    let n = b.0.len();
    let free: Vec<usize> = (0..n).filter(|&k| b.1[k] - b.0[k] >= 2).collect();
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0..(1u32 << free.len()) {
        let mut lo = b.0.clone();
        let mut hi = b.1.clone();
        for (bit, &k) in free.iter().enumerate() {
            let mid = (b.0[k] + b.1[k]).div_euclid(2);
            if mask & (1 << bit) != 0 {
                lo[k] = mid;
            } else {
                hi[k] = mid;
            }
        }
        out.push((lo, hi));
    }
    out
}

/// Distance function to the closed support of a set of cells.
#[derive(Clone, Debug)]
pub struct DistanceField {
    ambient: usize,
    spacing: Q,
    cells: Vec<CellKey>,
}

impl DistanceField {
    pub fn new(ambient: usize, spacing: Q, cells: impl IntoIterator<Item = CellKey>) -> Self {
        let cells: BTreeSet<CellKey> = cells.into_iter().collect();
        Self {
            ambient,
            spacing,
            cells: cells.into_iter().collect(),
        }
    }

    pub fn of_chain(c: &Chain) -> Self {
        Self::new(c.ambient(), c.spacing().clone(), c.support())
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellKey] {
        &self.cells
    }

    pub fn spacing(&self) -> &Q {
        &self.spacing
    }

    fn boxes(&self, mul: i64) -> Vec<IBox> {
        self.cells.iter().map(|c| scaled_box(c, mul)).collect()
    }

    fn to_real(&self, d2: i128, unit: &Q) -> Q {
        Q::from_integer(BigInt::from(d2)) * unit * unit
    }

    /// Exact `min_{x in cell} dist(x, support)^2`; `None` when the support is empty.
    pub fn min_dist_sq(&self, key: &CellKey, h: &Q) -> Option<Q> {
        if self.is_empty() {
            return None;
        }
        let u = common_units(&self.spacing, h);
        let q = scaled_box(key, u.query_mul);
        let best = self
            .cells
            .iter()
            .map(|c| box_box_sq(&q, &scaled_box(c, u.field_mul)))
            .min()?;
        Some(self.to_real(best, &u.unit))
    }

    /// Exact squared distance from a point to the support; `None` when empty.
    pub fn point_dist_sq(&self, p: &[Q]) -> Option<Q> {
        if self.is_empty() {
            return None;
        }
        let den = crate::rational::common_denominator(p.iter());
        let step = Q::new(BigInt::one(), den);
        let u = common_units(&self.spacing, &step);
        let pi: Coords = p
            .iter()
            .map(|x| {
                let v = (x / &u.unit).to_integer();
                i64::try_from(v).expect("coordinate out of range")
            })
            .collect();
        let best = self
            .cells
            .iter()
            .map(|c| point_box_sq(&pi, &scaled_box(c, u.field_mul)))
            .min()?;
        Some(self.to_real(best, &u.unit))
    }

    /// Squared distance from the center of a cell to the support.
    pub fn center_dist_sq(&self, key: &CellKey, h: &Q) -> Option<Q> {
        let half = h / Q::from_integer(2.into());
        let p: Vec<Q> = (0..key.ambient())
            .map(|k| {
                let twice = 2 * key.anchor[k] + i64::from(key.spans(k));
                Q::from_integer(twice.into()) * &half
            })
            .collect();
        self.point_dist_sq(&p)
    }

    /// Bracket on `sup_{x in cell} dist(x, support)^2`; `None` when empty.
    pub fn sup_dist_sq(&self, key: &CellKey, h: &Q) -> Option<DistBound> {
        if self.is_empty() {
            return None;
        }
        let u = common_units(&self.spacing, h);
        let m = 1i64 << SUP_DEPTH;
        let targets = self.boxes(u.field_mul * m);
        let q = scaled_box(key, u.query_mul * m);
        let (lo, hi) = sup_bracket(&q, &targets);
        let unit = &u.unit / Q::from_integer(BigInt::from(m));
        Some(DistBound {
            lower_sq: self.to_real(lo, &unit),
            upper_sq: self.to_real(hi, &unit),
        })
    }

    /// Certainly `cell ⊂ {dist < r}`; same answer as the bracket's upper bound
    /// test, with early exit once the threshold is decided.
    pub fn cell_within(&self, key: &CellKey, h: &Q, r: &Q) -> bool {
        if self.is_empty() || !r.is_positive() {
            return false;
        }
        let u = common_units(&self.spacing, h);
        let m = 1i64 << SUP_DEPTH;
        let unit = &u.unit / Q::from_integer(BigInt::from(m));
        let scaled = (r * r) / (&unit * &unit);
        let Ok(threshold) = i128::try_from(scaled.ceil().to_integer()) else {
            return false;
        };
        let targets = self.boxes(u.field_mul * m);
        let q = scaled_box(key, u.query_mul * m);
        sup_below(&q, &targets, threshold)
    }

    /// Exactly `cell ⊂ {dist >= r}`.
    pub fn cell_beyond(&self, key: &CellKey, h: &Q, r: &Q) -> bool {
        match self.min_dist_sq(key, h) {
            None => true,
            Some(d2) => d2 >= r * r,
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }
}

/// Bracket for `max_{x in q} min_j d(x, targets_j)^2`.
fn sup_bracket(q: &IBox, targets: &[IBox]) -> (i128, i128) {
    if targets.iter().any(|t| box_within(q, t)) {
        return (0, 0);
    }
    let mut lower = 0i128;
    let mut upper = 0i128;
    let mut stack = vec![q.clone()];
    while let Some(piece) = stack.pop() {
        let verts = box_vertices(&piece);
        let mut piece_lower = 0i128;
        for v in &verts {
            let d = targets.iter().map(|t| point_box_sq(v, t)).min().unwrap_or(0);
            piece_lower = piece_lower.max(d);
        }
        lower = lower.max(piece_lower);
        let piece_upper = if targets.iter().any(|t| box_within(&piece, t)) {
            0
        } else {
            targets
                .iter()
                .map(|t| verts.iter().map(|v| point_box_sq(v, t)).max().unwrap_or(0))
                .min()
                .unwrap_or(0)
        };
        if piece_upper <= lower {
            continue;
        }
        let splittable = (0..piece.0.len()).any(|k| piece.1[k] - piece.0[k] >= 2);
        if piece_upper == piece_lower || !splittable {
            upper = upper.max(piece_upper);
            continue;
        }
        stack.extend(split_box(&piece));
    }
    (lower, upper.max(lower))
}

/// Whether `max_{x in q} min_j d(x, targets_j)^2 < threshold` is certain.
fn sup_below(q: &IBox, targets: &[IBox], threshold: i128) -> bool {
    let mut stack = vec![q.clone()];
    while let Some(piece) = stack.pop() {
        if targets.iter().any(|t| box_within(&piece, t)) {
            continue;
        }
        let verts = box_vertices(&piece);
        let mut piece_lower = 0i128;
        for v in &verts {
            let d = targets.iter().map(|t| point_box_sq(v, t)).min().unwrap_or(0);
            piece_lower = piece_lower.max(d);
        }
        if piece_lower >= threshold {
            return false;
        }
        let piece_upper = targets
            .iter()
            .map(|t| verts.iter().map(|v| point_box_sq(v, t)).max().unwrap_or(0))
            .min()
            .unwrap_or(0);
        if piece_upper < threshold {
            continue;
        }
        if !(0..piece.0.len()).any(|k| piece.1[k] - piece.0[k] >= 2) {
            return false;
        }
        stack.extend(split_box(&piece));
    }
    true
}

/// Result of a Hausdorff distance computation between cell sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hausdorff {
    /// At least one of the sets is empty; the distance is `+∞`.
    EmptyInput,
    Bounded(DistBound),
}

impl Hausdorff {
    /// Certainly finite and `< r`.
    pub fn below(&self, r: &Q) -> bool {
        match self {
            Hausdorff::EmptyInput => false,
            Hausdorff::Bounded(b) => b.below(r),
        }
    }

    pub fn bound(&self) -> Option<&DistBound> {
        match self {
            Hausdorff::EmptyInput => None,
            Hausdorff::Bounded(b) => Some(b),
        }
    }

    /// Upper estimate as a float, `inf` for empty input.
    pub fn upper_f64(&self) -> f64 {
        match self {
            Hausdorff::EmptyInput => f64::INFINITY,
            Hausdorff::Bounded(b) => crate::rational::to_f64(&b.upper_sq).sqrt(),
        }
    }
}

fn directed(from: &DistanceField, to: &DistanceField) -> DistBound {
    let mut lower = Q::zero();
    let mut upper = Q::zero();
    for c in from.cells() {
        let b = to
            .sup_dist_sq(c, from.spacing())
            .expect("target is nonempty");
        if b.lower_sq > lower {
            lower = b.lower_sq.clone();
        }
        if b.upper_sq > upper {
            upper = b.upper_sq;
        }
    }
    DistBound {
        lower_sq: lower,
        upper_sq: upper,
    }
}

/// Hausdorff distance between the closed unions of two cell sets.
pub fn hausdorff_distance(a: &DistanceField, b: &DistanceField) -> Hausdorff {
    if a.is_empty() || b.is_empty() {
        return Hausdorff::EmptyInput;
    }
    let ab = directed(a, b);
    let ba = directed(b, a);
    Hausdorff::Bounded(DistBound {
        lower_sq: ab.lower_sq.max(ba.lower_sq),
        upper_sq: ab.upper_sq.max(ba.upper_sq),
    })
}

/// A closed subset of the box, tested at cell granularity.
#[derive(Clone, Debug)]
pub enum Region {
    Whole,
    Empty,
    /// Closed axis-aligned box `[lo, hi]`.
    Box { lo: Vec<Q>, hi: Vec<Q> },
    /// Union of closed `N`-cells of the grid with the given spacing.
    Cells { spacing: Q, cells: Arc<BTreeSet<CellKey>> },
    /// Union of the closed `N`-cells of a box grid other than the excluded ones.
    CellsExcept { grid: GridSpec, excluded: Arc<BTreeSet<CellKey>> },
    /// `{x : dist(x, support) < radius}`.
    Within { field: Arc<DistanceField>, radius: Q },
    /// `{x : dist(x, support) >= radius}`.
    Beyond { field: Arc<DistanceField>, radius: Q },
    /// Cells not contained in the inner region.
    Complement(Box<Region>),
}

impl Region {
    pub fn within(field: Arc<DistanceField>, radius: Q) -> Self {
        Region::Within { field, radius }
    }

    pub fn beyond(field: Arc<DistanceField>, radius: Q) -> Self {
        Region::Beyond { field, radius }
    }

    pub fn cells(spacing: Q, cells: impl IntoIterator<Item = CellKey>) -> Self {
        Region::Cells {
            spacing,
            cells: Arc::new(cells.into_iter().collect()),
        }
    }

    pub fn complement(self) -> Self {
        match self {
            Region::Complement(inner) => *inner,
            other => Region::Complement(Box::new(other)),
        }
    }

    /// Whether the closed cell `key` of the grid with spacing `h` lies in the region.
    pub fn contains_cell(&self, key: &CellKey, h: &Q) -> bool {
        match self {
            Region::Whole => true,
            Region::Empty => false,
            Region::Box { lo, hi } => {
                let (clo, chi) = key.lattice_box();
                (0..key.ambient()).all(|k| {
                    let a = Q::from_integer(clo[k].into()) * h;
                    let b = Q::from_integer(chi[k].into()) * h;
                    lo[k] <= a && b <= hi[k]
                })
            }
            Region::Cells { spacing, cells } => cell_in_union(key, h, spacing, |c| cells.contains(c)),
            Region::CellsExcept { grid, excluded } => {
                cell_in_union(key, h, &grid.spacing, |c| grid.contains(c) && !excluded.contains(c))
            }
            Region::Within { field, radius } => field.cell_within(key, h, radius),
            Region::Beyond { field, radius } => field.cell_beyond(key, h, radius),
            Region::Complement(inner) => !inner.contains_cell(key, h),
        }
    }
}

/// Whether a cell at spacing `h` lies in a closed `N`-cell of a set at spacing `set_h`,
/// where `set_h / h` is a power of two (possibly `1`).
fn cell_in_union(key: &CellKey, h: &Q, set_h: &Q, member: impl Fn(&CellKey) -> bool) -> bool {
    let ratio = set_h / h;
    if !ratio.is_integer() {
        return false;
    }
    let s = match i64::try_from(ratio.to_integer()) {
        Ok(s) if s >= 1 => s,
        _ => return false,
    };
    let n = key.ambient();
    let (lo, hi) = key.lattice_box();
    let mut choices: Vec<Vec<i64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut opts = Vec::with_capacity(2);
        for a in [lo[k].div_euclid(s), (hi[k] + s - 1).div_euclid(s) - 1] {
            if a * s <= lo[k] && hi[k] <= (a + 1) * s && !opts.contains(&a) {
                opts.push(a);
            }
        }
        if opts.is_empty() {
            return false;
        }
        choices.push(opts);
    }
    let axes: Vec<u8> = (0..n as u8).collect();
    let mut idx = vec![0usize; n];
    loop {
        let anchor: Vec<i64> = (0..n).map(|k| choices[k][idx[k]]).collect();
        if member(&CellKey::new(&anchor, &axes)) {
            return true;
        }
        let mut k = 0;
        loop {
            if k == n {
                return false;
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Stored cells of dimension `dim` contained in the region.
pub fn cells_within(cx: &CellComplex, dim: usize, region: &Region) -> Result<Vec<CellKey>> {
    let n = cx.dim();
    if dim > n || dim + 2 < n {
        return Err(Error::Dimension(format!(
            "cells of dimension {dim} are not stored in an N = {n} complex"
        )));
    }
    let h = cx.spacing();
    Ok(cx
        .cells(dim)
        .iter()
        .filter(|c| region.contains_cell(c, h))
        .cloned()
        .collect())
}

/// `c ⌞ region` at cell granularity.
pub fn restrict(c: &Chain, region: &Region) -> Chain {
    let h = c.spacing().clone();
    c.filter(|k| region.contains_cell(k, &h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use crate::rational::{q, ratio, to_f64};
    use proptest::prelude::*;

    fn cell(a: &[i64], x: &[u8]) -> CellKey {
        CellKey::new(a, x)
    }

    fn field(cells: &[CellKey]) -> DistanceField {
        DistanceField::new(3, q(1), cells.iter().cloned())
    }

    /// Dense-sampling estimate of the Hausdorff distance between unions of unit-lattice cells.
    fn sampled_hausdorff(a: &[CellKey], b: &[CellKey], steps: i64) -> f64 {
        let sample = |cs: &[CellKey]| -> Vec<[f64; 3]> {
            let mut pts = Vec::new();
            for c in cs {
                let (lo, hi) = c.lattice_box();
                let range = |k: usize| -> Vec<f64> {
                    if lo[k] == hi[k] {
                        vec![lo[k] as f64]
                    } else {
                        (0..=steps).map(|i| lo[k] as f64 + i as f64 / steps as f64).collect()
                    }
                };
                for x in range(0) {
                    for y in range(1) {
                        for z in range(2) {
                            pts.push([x, y, z]);
                        }
                    }
                }
            }
            pts
        };
        let pa = sample(a);
        let pb = sample(b);
        let directed = |p: &[[f64; 3]], r: &[[f64; 3]]| {
            p.iter()
                .map(|x| {
                    r.iter()
                        .map(|y| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        directed(&pa, &pb).max(directed(&pb, &pa))
    }

    #[test]
    fn hausdorff_identical_sets_is_zero() {
        let a = field(&[cell(&[0, 0, 0], &[0]), cell(&[1, 0, 0], &[1])]);
        let h = hausdorff_distance(&a, &a);
        assert_eq!(h.bound().unwrap().upper_sq, q(0));
    }

    #[test]
    fn hausdorff_parallel_edges() {
        let a = DistanceField::new(3, ratio(1, 4), [cell(&[0, 0, 0], &[0])]);
        // Same-axis edge three quarter-units away: offset 3/4.
        let b = DistanceField::new(3, ratio(1, 4), [cell(&[0, 3, 0], &[0])]);
        let h = hausdorff_distance(&a, &b);
        let bd = h.bound().unwrap();
        assert!(bd.is_exact());
        assert_eq!(bd.upper_sq, ratio(9, 16));
    }

    #[test]
    fn hausdorff_square_vs_edge() {
        let a = field(&[cell(&[0, 0, 0], &[0, 1])]);
        let b = field(&[cell(&[0, 0, 0], &[0])]);
        let h = hausdorff_distance(&a, &b);
        let bd = h.bound().unwrap();
        assert!(bd.is_exact());
        assert_eq!(bd.upper_sq, q(1));
        assert!((sampled_hausdorff(a.cells(), b.cells(), 8) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hausdorff_empty_is_sentinel() {
        let a = field(&[]);
        let b = field(&[cell(&[0, 0, 0], &[0])]);
        assert_eq!(hausdorff_distance(&a, &b), Hausdorff::EmptyInput);
        assert!(!hausdorff_distance(&a, &b).below(&q(100)));
    }

    #[test]
    fn sup_distance_between_two_targets_is_bracketed() {
        // Edge from (0,0,0) to (2,0,0); targets are its two endpoints. The sup
        // of the distance is 1 at the midpoint, not attained at a vertex.
        let edge = [cell(&[0, 0, 0], &[0]), cell(&[1, 0, 0], &[0])];
        let ends = field(&[cell(&[0, 0, 0], &[]), cell(&[2, 0, 0], &[])]);
        let mut worst = DistBound {
            lower_sq: q(0),
            upper_sq: q(0),
        };
        for e in &edge {
            let b = ends.sup_dist_sq(e, &q(1)).unwrap();
            worst.lower_sq = worst.lower_sq.max(b.lower_sq);
            worst.upper_sq = worst.upper_sq.max(b.upper_sq);
        }
        assert_eq!(worst.lower_sq, q(1));
        assert_eq!(worst.upper_sq, q(1));
    }

    #[test]
    fn min_and_center_distances() {
        let f = field(&[cell(&[0, 0, 0], &[0])]);
        assert_eq!(f.min_dist_sq(&cell(&[0, 2, 0], &[0, 2]), &q(1)).unwrap(), q(4));
        assert_eq!(f.center_dist_sq(&cell(&[0, 2, 0], &[0, 1, 2]), &q(1)).unwrap(), ratio(25, 4) + ratio(1, 4));
        // Query at a different spacing.
        assert_eq!(
            f.min_dist_sq(&cell(&[0, 3, 0], &[0]), &ratio(1, 2)).unwrap(),
            ratio(9, 4)
        );
    }

    #[test]
    fn cells_within_whole_and_empty() {
        let cx = build_grid(&GridSpec::cube(3, 0, 2, q(1)).unwrap()).unwrap();
        assert_eq!(cells_within(&cx, 2, &Region::Whole).unwrap().len(), 36);
        assert!(cells_within(&cx, 2, &Region::Empty).unwrap().is_empty());
        assert!(cells_within(&cx, 0, &Region::Whole).is_err());
    }

    /// Enumeration oracle: a cell lies in a closed box iff all its vertices do.
    fn count_in_box(cx: &CellComplex, dim: usize, lo: i64, hi: i64) -> usize {
        cx.cells(dim)
            .iter()
            .filter(|c| {
                let (a, b) = c.lattice_box();
                (0..3).all(|k| lo <= a[k] && b[k] <= hi)
            })
            .count()
    }

    #[test]
    fn cells_within_sup_norm_ball() {
        let cx = build_grid(&GridSpec::cube(3, 0, 4, q(1)).unwrap()).unwrap();
        let ball = Region::Box {
            lo: vec![q(1); 3],
            hi: vec![q(3); 3],
        };
        let three = cells_within(&cx, 3, &ball).unwrap().len();
        let two = cells_within(&cx, 2, &ball).unwrap().len();
        assert_eq!(three, count_in_box(&cx, 3, 1, 3));
        assert_eq!(two, count_in_box(&cx, 2, 1, 3));
        assert_eq!((three, two), (8, 36));
        let unit = Region::Box {
            lo: vec![q(2); 3],
            hi: vec![q(3); 3],
        };
        assert_eq!(cells_within(&cx, 3, &unit).unwrap().len(), 1);
        assert_eq!(cells_within(&cx, 2, &unit).unwrap().len(), 6);
    }

    #[test]
    fn explicit_cell_region_and_restriction() {
        let set = Region::cells(q(1), [cell(&[0, 0, 0], &[0, 1, 2])]);
        let c = Chain::from_terms(
            3,
            2,
            q(1),
            [
                (cell(&[0, 0, 1], &[0, 1]), q(2)),
                (cell(&[0, 0, 2], &[0, 1]), q(-1)),
            ],
        )
        .unwrap();
        let inside = restrict(&c, &set);
        let outside = restrict(&c, &set.clone().complement());
        assert_eq!(inside.len(), 1);
        assert_eq!(inside.mass() + outside.mass(), c.mass());
        assert!(restrict(&c, &Region::Whole) == c);
        assert!(restrict(&c, &Region::Empty).is_zero());
        // Finer cells inside the coarse set.
        assert!(set.contains_cell(&cell(&[1, 1, 2], &[0, 1]), &ratio(1, 2)));
        assert!(!set.contains_cell(&cell(&[1, 1, 3], &[0, 1]), &ratio(1, 2)));
    }

    #[test]
    fn distance_regions_partition_at_cell_level() {
        let cx = build_grid(&GridSpec::cube(3, 0, 4, q(1)).unwrap()).unwrap();
        let f = Arc::new(field(&[cell(&[2, 2, 2], &[0])]));
        let inner = Region::within(f.clone(), ratio(3, 2));
        let outer = Region::beyond(f, ratio(3, 2));
        for c in cx.cells(2) {
            assert!(!(inner.contains_cell(c, &q(1)) && outer.contains_cell(c, &q(1))));
        }
    }

    fn arb_cells() -> impl Strategy<Value = Vec<CellKey>> {
        proptest::collection::vec((0i64..3, 0i64..3, 0i64..2, 0usize..3), 1..4).prop_map(|v| {
            v.into_iter()
                .map(|(x, y, z, a)| CellKey::new(&[x, y, z], &[a as u8]))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn hausdorff_triangle_inequality(a in arb_cells(), b in arb_cells(), c in arb_cells()) {
            let (fa, fb, fc) = (field(&a), field(&b), field(&c));
            let ab = hausdorff_distance(&fa, &fb).bound().unwrap().clone();
            let bc = hausdorff_distance(&fb, &fc).bound().unwrap().clone();
            let ac = hausdorff_distance(&fa, &fc).bound().unwrap().clone();
            let s = to_f64(&ab.upper_sq).sqrt() + to_f64(&bc.upper_sq).sqrt();
            prop_assert!(to_f64(&ac.lower_sq).sqrt() <= s + 1e-9);
        }

        #[test]
        fn hausdorff_bracket_contains_sampled_value(a in arb_cells(), b in arb_cells()) {
            let h = hausdorff_distance(&field(&a), &field(&b));
            let bd = h.bound().unwrap();
            let sampled = sampled_hausdorff(&a, &b, 16);
            prop_assert!(sampled <= to_f64(&bd.upper_sq).sqrt() + 1e-9);
            prop_assert!(to_f64(&bd.lower_sq).sqrt() <= sampled + 1e-9);
        }

        #[test]
        fn restrict_is_idempotent_and_linear(
            x in 0i64..3, y in 0i64..3, k in -2i64..=2
        ) {
            let c = Chain::from_terms(3, 2, q(1), [
                (CellKey::new(&[x, y, 0], &[0, 1]), q(1)),
                (CellKey::new(&[0, x, y], &[1, 2]), q(k)),
            ]).unwrap();
            let region = Region::cells(q(1), [CellKey::new(&[0, 0, 0], &[0, 1, 2]), CellKey::new(&[1, 1, 0], &[0, 1, 2])]);
            let once = restrict(&c, &region);
            prop_assert_eq!(restrict(&once, &region), once.clone());
            let doubled = restrict(&c.scale(&q(2)), &region);
            prop_assert_eq!(doubled, once.scale(&q(2)));
        }
    }
}
