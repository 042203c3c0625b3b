//! Axis-aligned cubical grids.
//!
//! A cell is the closed cube `anchor·h + [0,h]^axes × {0}^others`, with the
//! anchor measured in lattice units from the global origin. Because every
//! box corner is required to sit on the lattice, sub-boxes and refinements
//! of a grid share keys with it.
//!
//! Orientation: the face of a cell in direction `+e_j` carries the sign
//! `(-1)^p`, where `p` is the 0-based position of `j` among the cell's
//! sorted axes; the opposite face carries the negated sign.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};
use smallvec::SmallVec;

use crate::error::{Error, ParseError, Result};
use crate::rational::{fmt_q, parse_q, Q};

/// Default ceiling on the total number of stored cells.
pub const DEFAULT_CELL_LIMIT: u64 = 4_000_000;

pub type Coords = SmallVec<[i64; 4]>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub anchor: Coords,
    pub axes: SmallVec<[u8; 4]>,
}

impl CellKey {
    pub fn new(anchor: &[i64], axes: &[u8]) -> Self {
        let mut axes: SmallVec<[u8; 4]> = axes.iter().copied().collect();
        axes.sort_unstable();
        axes.dedup();
        Self {
            anchor: anchor.iter().copied().collect(),
            axes,
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn ambient(&self) -> usize {
        self.anchor.len()
    }

    pub fn spans(&self, axis: usize) -> bool {
        self.axes.iter().any(|&a| a as usize == axis)
    }

    /// Codimension-one faces with their incidence signs.
    pub fn faces(&self) -> Vec<(CellKey, i8)> {
        let mut out = Vec::with_capacity(2 * self.axes.len());
        for (pos, &j) in self.axes.iter().enumerate() {
            let sign: i8 = if pos % 2 == 0 { 1 } else { -1 };
            let mut axes = self.axes.clone();
            axes.remove(pos);
            let mut upper = self.anchor.clone();
            upper[j as usize] += 1;
            out.push((
                CellKey {
                    anchor: upper,
                    axes: axes.clone(),
                },
                sign,
            ));
            out.push((
                CellKey {
                    anchor: self.anchor.clone(),
                    axes,
                },
                -sign,
            ));
        }
        out
    }

    /// Lattice bounds of the closed cell along every axis.
    pub fn lattice_box(&self) -> (Coords, Coords) {
        let lo = self.anchor.clone();
        let mut hi = self.anchor.clone();
        for &a in &self.axes {
            hi[a as usize] += 1;
        }
        (lo, hi)
    }

    /// True when `self` is a (not necessarily proper) face of `other`.
    pub fn is_face_of(&self, other: &CellKey) -> bool {
        if self.anchor.len() != other.anchor.len() {
            return false;
        }
        let (lo, hi) = self.lattice_box();
        let (olo, ohi) = other.lattice_box();
        (0..lo.len()).all(|k| olo[k] <= lo[k] && hi[k] <= ohi[k])
    }

    /// The `2^dim` cells of the halved lattice covering this cell.
    pub fn subdivide(&self) -> Vec<CellKey> {
        let base: Coords = self.anchor.iter().map(|a| 2 * a).collect();
        let k = self.axes.len();
        let mut out = Vec::with_capacity(1 << k);
        for mask in 0..(1u32 << k) {
            let mut anchor = base.clone();
            for (bit, &a) in self.axes.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    anchor[a as usize] += 1;
                }
            }
            out.push(CellKey {
                anchor,
                axes: self.axes.clone(),
            });
        }
        out
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "anchor=(")?;
        for (i, a) in self.anchor.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ");axes=(")?;
        for (i, a) in self.axes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

fn parse_tuple<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, ParseError> {
    let inner = s
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| ParseError::new(format!("expected parenthesized list, got `{s}`")))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| ParseError::new(format!("bad list entry `{t}`")))
        })
        .collect()
}

impl FromStr for CellKey {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (a, x) = s
            .trim()
            .split_once(';')
            .ok_or_else(|| ParseError::new(format!("bad cell key `{s}`")))?;
        let a = a
            .trim()
            .strip_prefix("anchor=")
            .ok_or_else(|| ParseError::new(format!("bad cell key `{s}`")))?;
        let x = x
            .trim()
            .strip_prefix("axes=")
            .ok_or_else(|| ParseError::new(format!("bad cell key `{s}`")))?;
        let anchor: Vec<i64> = parse_tuple(a)?;
        let axes: Vec<u8> = parse_tuple(x)?;
        if axes.iter().any(|&j| j as usize >= anchor.len()) {
            return Err(ParseError::new(format!("axis out of range in `{s}`")));
        }
        let key = CellKey::new(&anchor, &axes);
        if key.axes.len() != axes.len() || axes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ParseError::new(format!("axes must be strictly increasing in `{s}`")));
        }
        Ok(key)
    }
}

/// Box, dimension and spacing of a cubical grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub dim: usize,
    pub box_min: Vec<Q>,
    pub box_max: Vec<Q>,
    pub spacing: Q,
}

impl GridSpec {
    pub fn new(dim: usize, box_min: Vec<Q>, box_max: Vec<Q>, spacing: Q) -> Result<Self> {
        let spec = Self {
            dim,
            box_min,
            box_max,
            spacing,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Cube `[lo, hi]^dim` with integer corners.
    pub fn cube(dim: usize, lo: i64, hi: i64, spacing: Q) -> Result<Self> {
        Self::new(
            dim,
            vec![Q::from_integer(lo.into()); dim],
            vec![Q::from_integer(hi.into()); dim],
            spacing,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(Error::InvalidGrid(format!("N = {} must be at least 3", self.dim)));
        }
        if self.box_min.len() != self.dim || self.box_max.len() != self.dim {
            return Err(Error::InvalidGrid("box corners must have N coordinates".into()));
        }
        if !self.spacing.is_positive() {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        for k in 0..self.dim {
            let lo = &self.box_min[k] / &self.spacing;
            let hi = &self.box_max[k] / &self.spacing;
            if !lo.is_integer() || !hi.is_integer() {
                return Err(Error::InvalidGrid(format!(
                    "box corner coordinate {k} is not a multiple of h = {}",
                    fmt_q(&self.spacing)
                )));
            }
            if hi <= lo {
                return Err(Error::InvalidGrid(format!(
                    "box side {k} must be a positive multiple of h"
                )));
            }
        }
        Ok(())
    }

    /// Lattice index of the lower box corner along each axis.
    pub fn lattice_min(&self) -> Coords {
        self.box_min
            .iter()
            .map(|x| (x / &self.spacing).to_integer().to_i64().expect("lattice overflow"))
            .collect()
    }

    pub fn lattice_max(&self) -> Coords {
        self.box_max
            .iter()
            .map(|x| (x / &self.spacing).to_integer().to_i64().expect("lattice overflow"))
            .collect()
    }

    pub fn cells_per_axis(&self) -> Coords {
        let lo = self.lattice_min();
        let hi = self.lattice_max();
        (0..self.dim).map(|k| hi[k] - lo[k]).collect()
    }

    /// Number of closed-box cells of dimension `k`.
    pub fn cell_count(&self, k: usize) -> u64 {
        let m = self.cells_per_axis();
        axis_subsets(self.dim, k)
            .iter()
            .map(|axes| {
                (0..self.dim)
                    .map(|j| {
                        if axes.contains(&(j as u8)) {
                            m[j] as u64
                        } else {
                            m[j] as u64 + 1
                        }
                    })
                    .product::<u64>()
            })
            .sum()
    }

    pub fn stored_cell_count(&self) -> u64 {
        (self.dim - 2..=self.dim).map(|k| self.cell_count(k)).sum()
    }

    /// Same box at half the spacing.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            box_min: self.box_min.clone(),
            box_max: self.box_max.clone(),
            spacing: &self.spacing / Q::from_integer(BigInt::from(2)),
        }
    }

    /// True when the closed cell lies inside the box.
    pub fn contains(&self, key: &CellKey) -> bool {
        if key.ambient() != self.dim {
            return false;
        }
        let lo = self.lattice_min();
        let hi = self.lattice_max();
        let (clo, chi) = key.lattice_box();
        (0..self.dim).all(|k| lo[k] <= clo[k] && chi[k] <= hi[k])
    }

    /// All cells of dimension `k`, in key order.
    pub fn cells(&self, k: usize) -> Vec<CellKey> {
        let lo = self.lattice_min();
        let hi = self.lattice_max();
        let mut out = Vec::new();
        for axes in axis_subsets(self.dim, k) {
            let ranges: Vec<(i64, i64)> = (0..self.dim)
                .map(|j| {
                    if axes.contains(&(j as u8)) {
                        (lo[j], hi[j] - 1)
                    } else {
                        (lo[j], hi[j])
                    }
                })
                .collect();
            let mut cur: Coords = ranges.iter().map(|r| r.0).collect();
            'outer: loop {
                out.push(CellKey {
                    anchor: cur.clone(),
                    axes: axes.iter().copied().collect(),
                });
                for j in (0..self.dim).rev() {
                    if cur[j] < ranges[j].1 {
                        cur[j] += 1;
                        continue 'outer;
                    }
                    cur[j] = ranges[j].0;
                }
                break;
            }
        }
        out.sort_unstable();
        out
    }

    /// Real coordinates of a lattice point.
    pub fn point(&self, lattice: &[i64]) -> Vec<Q> {
        lattice
            .iter()
            .map(|&a| Q::from_integer(a.into()) * &self.spacing)
            .collect()
    }

    /// Measure `h^k` of a `k`-cell.
    pub fn measure(&self, k: usize) -> Q {
        num_traits::pow(self.spacing.clone(), k)
    }

    /// Structured text form (TOML keys `N`, `box_min`, `box_max`, `h`).
    pub fn to_text(&self) -> String {
        let list = |v: &[Q]| {
            v.iter()
                .map(|x| format!("\"{}\"", fmt_q(x)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "N = {}\nbox_min = [{}]\nbox_max = [{}]\nh = \"{}\"\n",
            self.dim,
            list(&self.box_min),
            list(&self.box_max),
            fmt_q(&self.spacing)
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| ParseError::new(format!("grid spec: {e}")))?;
        Self::from_table(&table)
    }

    pub(crate) fn from_table(table: &toml::Table) -> Result<Self> {
        let dim = table
            .get("N")
            .and_then(|v| v.as_integer())
            .ok_or_else(|| ParseError::new("grid spec: missing integer key `N`"))?;
        let corner = |name: &str| -> Result<Vec<Q>> {
            let arr = table
                .get(name)
                .and_then(|v| v.as_array())
                .ok_or_else(|| ParseError::new(format!("grid spec: missing array `{name}`")))?;
            Ok(arr.iter().map(toml_rational).collect::<std::result::Result<Vec<_>, _>>()?)
        };
        let h = table
            .get("h")
            .ok_or_else(|| ParseError::new("grid spec: missing key `h`"))
            .and_then(toml_rational)?;
        if dim < 0 {
            return Err(ParseError::new("grid spec: negative N").into());
        }
        Self::new(dim as usize, corner("box_min")?, corner("box_max")?, h)
    }
}

/// Reads a rational from a TOML integer, float-free string (`"p/q"`), or string integer.
pub(crate) fn toml_rational(v: &toml::Value) -> std::result::Result<Q, ParseError> {
    match v {
        toml::Value::Integer(i) => Ok(Q::from_integer((*i).into())),
        toml::Value::String(s) => parse_q(s),
        toml::Value::Float(f) => parse_q(&f.to_string()),
        other => Err(ParseError::new(format!("expected rational, got `{other}`"))),
    }
}

/// Sorted `k`-subsets of `0..n`, in lexicographic order.
pub fn axis_subsets(n: usize, k: usize) -> Vec<Vec<u8>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j as u8);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Sparse signed incidence matrix of `∂_k`.
#[derive(Clone, Debug)]
pub struct IncidenceMatrix {
    /// `(k-1)`-cells indexing rows.
    pub rows: Vec<CellKey>,
    /// `k`-cells indexing columns.
    pub cols: Vec<CellKey>,
    /// Per column: `(row index, ±1)`.
    pub entries: Vec<Vec<(usize, i8)>>,
}

impl IncidenceMatrix {
    pub fn nnz(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    /// Integer product `self · rhs`, as a dense map keyed by (row, col).
    pub fn compose(&self, rhs: &IncidenceMatrix) -> HashMap<(usize, usize), i64> {
        let col_of: HashMap<&CellKey, usize> =
            self.cols.iter().enumerate().map(|(i, c)| (c, i)).collect();
        let mut out: HashMap<(usize, usize), i64> = HashMap::new();
        for (j, col) in rhs.entries.iter().enumerate() {
            for &(mid, s1) in col {
                let mid_idx = col_of[&rhs.rows[mid]];
                for &(r, s2) in &self.entries[mid_idx] {
                    *out.entry((r, j)).or_insert(0) += (s1 as i64) * (s2 as i64);
                }
            }
        }
        out.retain(|_, v| *v != 0);
        out
    }
}

/// Cubical complex with cells of dimensions `N-2`, `N-1` and `N`.
#[derive(Clone, Debug)]
pub struct CellComplex {
    spec: GridSpec,
    cells: Vec<Vec<CellKey>>,
    index: Vec<HashMap<CellKey, usize>>,
}

pub fn build_grid(spec: &GridSpec) -> Result<CellComplex> {
    CellComplex::build(spec, DEFAULT_CELL_LIMIT)
}

impl CellComplex {
    pub fn build(spec: &GridSpec, limit: u64) -> Result<Self> {
        spec.validate()?;
        let count = spec.stored_cell_count();
        if count > limit {
            return Err(Error::CellLimit { count, limit });
        }
        let n = spec.dim;
        let mut cells = Vec::with_capacity(3);
        let mut index = Vec::with_capacity(3);
        for k in n - 2..=n {
            let list = spec.cells(k);
            let map = list.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
            cells.push(list);
            index.push(map);
        }
        Ok(Self { spec: spec.clone(), cells, index })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn spacing(&self) -> &Q {
        &self.spec.spacing
    }

    fn slot(&self, k: usize) -> Option<usize> {
        let n = self.spec.dim;
        (k + 2 >= n && k <= n).then(|| k + 2 - n)
    }

    /// Stored cells of dimension `k` (empty for unstored dimensions).
    pub fn cells(&self, k: usize) -> &[CellKey] {
        match self.slot(k) {
            Some(s) => &self.cells[s],
            None => &[],
        }
    }

    pub fn index_of(&self, key: &CellKey) -> Option<usize> {
        self.slot(key.dim()).and_then(|s| self.index[s].get(key).copied())
    }

    pub fn contains(&self, key: &CellKey) -> bool {
        self.index_of(key).is_some()
    }

    pub fn cell_measure(&self, key: &CellKey) -> Result<Q> {
        if !self.contains(key) {
            return Err(Error::UnknownCell(key.to_string()));
        }
        Ok(self.spec.measure(key.dim()))
    }

    pub fn boundary_matrix(&self, k: usize) -> Result<IncidenceMatrix> {
        let n = self.spec.dim;
        if k != n && k != n - 1 {
            return Err(Error::Dimension(format!(
                "boundary matrix requested for k = {k}; only k = {} and {} are stored",
                n - 1,
                n
            )));
        }
        let rows = self.cells(k - 1).to_vec();
        let cols = self.cells(k).to_vec();
        let entries = cols
            .iter()
            .map(|c| {
                c.faces()
                    .into_iter()
                    .map(|(f, s)| (self.index_of(&f).expect("face of stored cell is stored"), s))
                    .collect()
            })
            .collect();
        Ok(IncidenceMatrix { rows, cols, entries })
    }

    /// The complex at half the spacing over the same box.
    pub fn refine(&self) -> Result<CellComplex> {
        Self::build(&self.spec.refined(), DEFAULT_CELL_LIMIT)
    }

    pub fn refine_with_limit(&self, limit: u64) -> Result<CellComplex> {
        Self::build(&self.spec.refined(), limit)
    }
}

/// `h^k` with `h` given.
pub fn measure(h: &Q, k: usize) -> Q {
    if k == 0 {
        return Q::one();
    }
    num_traits::pow(h.clone(), k)
}
