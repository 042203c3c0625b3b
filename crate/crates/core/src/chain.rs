//! Sparse rational chains over cubical cells.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::error::{Error, ParseError, Result};
use crate::grid::{measure, CellComplex, CellKey};
use crate::rational::{fmt_q, parse_q, Q};

/// A finite formal sum of oriented `dim`-cells of the lattice with spacing `h`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    ambient: usize,
    dim: usize,
    spacing: Q,
    coeffs: BTreeMap<CellKey, Q>,
}

impl Chain {
    pub fn zero(ambient: usize, dim: usize, spacing: Q) -> Self {
        Self {
            ambient,
            dim,
            spacing,
            coeffs: BTreeMap::new(),
        }
    }

    /// Builds a chain from `(cell, coefficient)` pairs, summing repeats.
    pub fn from_terms(
        ambient: usize,
        dim: usize,
        spacing: Q,
        terms: impl IntoIterator<Item = (CellKey, Q)>,
    ) -> Result<Self> {
        let mut c = Self::zero(ambient, dim, spacing);
        for (k, v) in terms {
            c.check_key(&k)?;
            c.add_term(k, v);
        }
        Ok(c)
    }

    fn check_key(&self, k: &CellKey) -> Result<()> {
        if k.dim() != self.dim || k.ambient() != self.ambient {
            return Err(Error::Dimension(format!(
                "cell {k} does not have dimension {} in R^{}",
                self.dim, self.ambient
            )));
        }
        Ok(())
    }

    pub fn add_term(&mut self, key: CellKey, value: Q) {
        if value.is_zero() {
            return;
        }
        match self.coeffs.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(value);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += value;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> &Q {
        &self.spacing
    }

    pub fn coeffs(&self) -> &BTreeMap<CellKey, Q> {
        &self.coeffs
    }

    pub fn coeff(&self, key: &CellKey) -> Q {
        self.coeffs.get(key).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, &Q)> {
        self.coeffs.iter()
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.values().all(|v| v.is_integer())
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> Q {
        self.coeffs
            .values()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(Q::zero)
    }

    /// Every cell lies in the complex and the spacings agree.
    pub fn lives_on(&self, cx: &CellComplex) -> bool {
        cx.spacing() == &self.spacing
            && cx.dim() == self.ambient
            && self.coeffs.keys().all(|k| cx.spec().contains(k))
    }

    pub fn boundary(&self) -> Result<Chain> {
        if self.dim == 0 {
            return Err(Error::Dimension("boundary of a 0-chain".into()));
        }
        let mut out = Chain::zero(self.ambient, self.dim - 1, self.spacing.clone());
        for (k, v) in &self.coeffs {
            for (f, s) in k.faces() {
                let term = if s > 0 { v.clone() } else { -v.clone() };
                out.add_term(f, term);
            }
        }
        Ok(out)
    }

    /// `Σ |c| h^dim`.
    pub fn mass(&self) -> Q {
        let total: Q = self.coeffs.values().map(|v| v.abs()).sum();
        total * measure(&self.spacing, self.dim)
    }

    fn check_compatible(&self, other: &Chain) -> Result<()> {
        if self.dim != other.dim || self.ambient != other.ambient {
            return Err(Error::Dimension(format!(
                "cannot combine a {}-chain with a {}-chain",
                self.dim, other.dim
            )));
        }
        if self.spacing != other.spacing {
            return Err(Error::Dimension(format!(
                "chains live on different grids (h = {} vs {})",
                fmt_q(&self.spacing),
                fmt_q(&other.spacing)
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Chain) -> Result<Chain> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, v) in &other.coeffs {
            out.add_term(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Chain) -> Result<Chain> {
        self.add(&other.scale(&-Q::from_integer(1.into())))
    }

    pub fn scale(&self, lambda: &Q) -> Chain {
        let mut out = Chain::zero(self.ambient, self.dim, self.spacing.clone());
        if lambda.is_zero() {
            return out;
        }
        out.coeffs = self
            .coeffs
            .iter()
            .map(|(k, v)| (k.clone(), v * lambda))
            .collect();
        out
    }

    pub fn neg(&self) -> Chain {
        self.scale(&-Q::from_integer(1.into()))
    }

    /// Keeps the cells accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&CellKey) -> bool) -> Chain {
        let mut out = Chain::zero(self.ambient, self.dim, self.spacing.clone());
        out.coeffs = self
            .coeffs
            .iter()
            .filter(|(k, _)| keep(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        out
    }

    /// Cells with nonzero coefficient; their closed union is the support.
    pub fn support(&self) -> BTreeSet<CellKey> {
        self.coeffs.keys().cloned().collect()
    }

    /// The same current on the grid with half the spacing.
    pub fn subdivide(&self) -> Chain {
        let mut out = Chain::zero(
            self.ambient,
            self.dim,
            &self.spacing / Q::from_integer(2.into()),
        );
        for (k, v) in &self.coeffs {
            for c in k.subdivide() {
                out.add_term(c, v.clone());
            }
        }
        out
    }

    /// Text form: header `dim=<k> h=<p/q>`, then one line per cell.
    pub fn to_text(&self) -> String {
        let mut s = format!("dim={} h={}\n", self.dim, fmt_q(&self.spacing));
        for (k, v) in &self.coeffs {
            let _ = writeln!(s, "{k} coeff={}", fmt_q(v));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Chain> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| ParseError::new("chain file: missing header"))?;
        let mut dim = None;
        let mut spacing = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("dim=") {
                dim = Some(
                    v.parse::<usize>()
                        .map_err(|_| ParseError::new(format!("chain file: bad dim `{v}`")))?,
                );
            } else if let Some(v) = tok.strip_prefix("h=") {
                spacing = Some(parse_q(v)?);
            } else {
                return Err(ParseError::new(format!("chain file: unexpected header token `{tok}`")).into());
            }
        }
        let dim = dim.ok_or_else(|| ParseError::new("chain file: header lacks dim"))?;
        let spacing = spacing.ok_or_else(|| ParseError::new("chain file: header lacks h"))?;
        if !spacing.is_positive() {
            return Err(ParseError::new("chain file: h must be positive").into());
        }
        let mut ambient = None;
        let mut out: Option<Chain> = None;
        for (i, line) in lines.enumerate() {
            let (key, coeff) = line.rsplit_once(" coeff=").ok_or_else(|| {
                ParseError::new(format!("chain file line {}: expected `<cell> coeff=<p/q>`", i + 2))
            })?;
            let key: CellKey = key.parse()?;
            let coeff = parse_q(coeff)?;
            let n = *ambient.get_or_insert(key.ambient());
            let chain = out.get_or_insert_with(|| Chain::zero(n, dim, spacing.clone()));
            chain.check_key(&key).map_err(|e| {
                ParseError::new(format!("chain file line {}: {e}", i + 2))
            })?;
            if chain.coeffs.contains_key(&key) {
                return Err(ParseError::new(format!("chain file line {}: duplicate cell {key}", i + 2)).into());
            }
            chain.add_term(key, coeff);
        }
        Ok(out.unwrap_or_else(|| Chain::zero(dim + 2, dim, spacing)))
    }

    /// Reads a chain file whose ambient dimension is known (needed for empty chains).
    pub fn from_text_in(text: &str, ambient: usize) -> Result<Chain> {
        let c = Chain::from_text(text)?;
        if c.is_zero() {
            return Ok(Chain::zero(ambient, c.dim, c.spacing));
        }
        if c.ambient != ambient {
            return Err(Error::Dimension(format!(
                "chain lives in R^{}, expected R^{ambient}",
                c.ambient
            )));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use crate::rational::{q, ratio};
    use proptest::prelude::*;

    fn cell(a: &[i64], x: &[u8]) -> CellKey {
        CellKey::new(a, x)
    }

    fn unit_cube() -> Chain {
        Chain::from_terms(3, 3, q(1), [(cell(&[0, 0, 0], &[0, 1, 2]), q(1))]).unwrap()
    }

    #[test]
    fn square_boundary_is_counterclockwise_loop() {
        let sq = Chain::from_terms(3, 2, q(1), [(cell(&[0, 0, 0], &[0, 1]), q(1))]).unwrap();
        let b = sq.boundary().unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.coeff(&cell(&[0, 0, 0], &[0])), q(1));
        assert_eq!(b.coeff(&cell(&[1, 0, 0], &[1])), q(1));
        assert_eq!(b.coeff(&cell(&[0, 1, 0], &[0])), q(-1));
        assert_eq!(b.coeff(&cell(&[0, 0, 0], &[1])), q(-1));
    }

    #[test]
    fn cube_boundary() {
        let b = unit_cube().boundary().unwrap();
        assert_eq!(b.len(), 6);
        assert_eq!(b.mass(), q(6));
        assert!(b.boundary().unwrap().is_zero());
    }

    #[test]
    fn adjacent_squares_share_cancelling_edge() {
        let two = Chain::from_terms(
            3,
            2,
            q(1),
            [
                (cell(&[0, 0, 0], &[0, 1]), q(1)),
                (cell(&[1, 0, 0], &[0, 1]), q(1)),
            ],
        )
        .unwrap();
        let b = two.boundary().unwrap();
        assert_eq!(b.len(), 6);
        assert!(b.coeff(&cell(&[1, 0, 0], &[1])).is_zero());
        assert_eq!(b.mass(), q(6));
    }

    #[test]
    fn mass_examples() {
        assert_eq!(Chain::zero(3, 2, q(1)).mass(), q(0));
        let c = Chain::from_terms(3, 2, ratio(1, 2), [(cell(&[0, 0, 0], &[0, 1]), q(3))]).unwrap();
        assert_eq!(c.mass(), ratio(3, 4));
    }

    #[test]
    fn add_and_scale() {
        let a = Chain::from_terms(
            3,
            2,
            q(1),
            [
                (cell(&[0, 0, 0], &[0, 1]), q(1)),
                (cell(&[0, 0, 1], &[0, 1]), q(2)),
            ],
        )
        .unwrap();
        assert!(a.add(&a.scale(&q(-1))).unwrap().is_zero());
        let b = Chain::from_terms(3, 2, q(1), [(cell(&[0, 0, 0], &[0, 1]), q(-1))]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.coeff(&cell(&[0, 0, 0], &[0, 1])).is_zero());
        let other_dim = Chain::zero(3, 1, q(1));
        assert!(a.add(&other_dim).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let c = Chain::from_terms(
            3,
            2,
            ratio(1, 4),
            [
                (cell(&[0, -1, 0], &[0, 1]), ratio(-3, 7)),
                (cell(&[2, 0, 5], &[1, 2]), q(4)),
            ],
        )
        .unwrap();
        let text = c.to_text();
        assert!(text.starts_with("dim=2 h=1/4\n"));
        let back = Chain::from_text(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn subdivision_preserves_boundary_and_mass() {
        let sq = Chain::from_terms(3, 2, q(1), [(cell(&[0, 0, 0], &[0, 1]), q(2))]).unwrap();
        let fine = sq.subdivide();
        assert_eq!(fine.len(), 4);
        assert_eq!(fine.mass(), sq.mass());
        assert_eq!(fine.boundary().unwrap(), sq.boundary().unwrap().subdivide());
    }

    #[test]
    fn chain_on_grid() {
        let cx = build_grid(&GridSpec::cube(3, 0, 1, q(1)).unwrap()).unwrap();
        assert!(unit_cube().lives_on(&cx));
        let off = Chain::from_terms(3, 3, q(1), [(cell(&[1, 0, 0], &[0, 1, 2]), q(1))]).unwrap();
        assert!(!off.lives_on(&cx));
    }

    fn arb_chain(dim: usize) -> impl Strategy<Value = Chain> {
        let axes = crate::grid::axis_subsets(3, dim);
        proptest::collection::vec(
            (0..axes.len(), 0i64..3, 0i64..3, 0i64..3, -3i64..=3),
            0..12,
        )
        .prop_map(move |terms| {
            Chain::from_terms(
                3,
                dim,
                q(1),
                terms
                    .into_iter()
                    .map(|(ai, x, y, z, c)| (CellKey::new(&[x, y, z], &axes[ai]), q(c))),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn boundary_of_boundary_vanishes(c in arb_chain(3)) {
            prop_assert!(c.boundary().unwrap().boundary().unwrap().is_zero());
        }

        #[test]
        fn boundary_of_boundary_vanishes_on_faces(c in arb_chain(2)) {
            prop_assert!(c.boundary().unwrap().boundary().unwrap().is_zero());
        }

        #[test]
        fn mass_is_subadditive(a in arb_chain(2), b in arb_chain(2)) {
            prop_assert!(a.add(&b).unwrap().mass() <= a.mass() + b.mass());
        }

        #[test]
        fn boundary_is_linear(a in arb_chain(2), b in arb_chain(2), k in -3i64..=3) {
            let lhs = a.scale(&q(k)).add(&b).unwrap().boundary().unwrap();
            let rhs = a.boundary().unwrap().scale(&q(k)).add(&b.boundary().unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn subdivision_commutes_with_boundary(c in arb_chain(2)) {
            prop_assert_eq!(c.subdivide().boundary().unwrap(), c.boundary().unwrap().subdivide());
            prop_assert_eq!(c.subdivide().mass(), c.mass());
        }
    }
}
