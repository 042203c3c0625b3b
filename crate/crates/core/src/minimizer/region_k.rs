//! The trimming region `K`: closed grid cells well away from `spt B`.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::grid::{CellKey, GridSpec};
use crate::rational::{fmt_q, Q};
use crate::region::{DistanceField, Region};

#[derive(Clone, Debug)]
pub struct RegionK {
    /// Closed union of the box `N`-cells outside `near`.
    pub region: Region,
    /// `N`-cells whose center is closer than `(3/4) ε₁` to `spt B`.
    pub near: BTreeSet<CellKey>,
}

impl RegionK {
    /// The cells of the box not in `K`, as a region.
    pub fn outside(&self) -> Region {
        self.region.clone().complement()
    }
}

/// Index range `[lo, hi)` per axis of `N`-cells meeting the `r`-neighborhood of the
/// bounding box of `field`, clipped to the grid box.
pub(crate) fn cell_range(field: &DistanceField, r: &Q, spec: &GridSpec) -> (Vec<i64>, Vec<i64>) {
    let n = spec.dim;
    let h = &spec.spacing;
    let bmin = spec.lattice_min();
    let bmax = spec.lattice_max();
    let mut lo = bmax.to_vec();
    let mut hi = bmin.to_vec();
    for c in field.cells() {
        let (a, z) = c.lattice_box();
        for k in 0..n {
            let x0 = (Q::from_integer(a[k].into()) * field.spacing() - r) / h;
            let x1 = (Q::from_integer(z[k].into()) * field.spacing() + r) / h;
            let x0 = i64::try_from(x0.floor().to_integer()).unwrap_or(i64::MIN / 2) - 1;
            let x1 = i64::try_from(x1.ceil().to_integer()).unwrap_or(i64::MAX / 2) + 1;
            lo[k] = lo[k].min(x0.max(bmin[k]));
            hi[k] = hi[k].max(x1.min(bmax[k]));
        }
    }
    (lo, hi)
}

/// Calls `f` on every `N`-cell anchored in `[lo, hi)`.
pub(crate) fn for_each_cell(lo: &[i64], hi: &[i64], mut f: impl FnMut(CellKey)) {
    let n = lo.len();
    if (0..n).any(|k| lo[k] >= hi[k]) {
        return;
    }
    let axes: Vec<u8> = (0..n as u8).collect();
    let mut idx = lo.to_vec();
    loop {
        f(CellKey::new(&idx, &axes));
        let mut k = 0;
        loop {
            if k == n {
                return;
            }
            idx[k] += 1;
            if idx[k] < hi[k] {
                break;
            }
            idx[k] = lo[k];
            k += 1;
        }
    }
}

/// Builds `K` and verifies `K ∩ I(ε₁/2) = ∅` and `O(ε₁) ⊂ K` exactly.
pub fn build_region_k(epsilon1: &Q, b: &Chain, spec: &GridSpec) -> Result<RegionK> {
    let n = spec.dim;
    let h = &spec.spacing;
    let lhs = Q::from_integer((16 * n as i64).into()) * h * h;
    if lhs > epsilon1 * epsilon1 {
        return Err(Error::RegionVerification(format!(
            "grid spacing {} exceeds epsilon1/(4 sqrt N) for epsilon1 = {}; refine the grid",
            fmt_q(h),
            fmt_q(epsilon1)
        )));
    }
    let field = DistanceField::of_chain(b);
    let mut near = BTreeSet::new();
    if !field.is_empty() {
        let three_quarters = epsilon1 * Q::new(3.into(), 4.into());
        let near_sq = &three_quarters * &three_quarters;
        let half_sq = epsilon1 * epsilon1 / Q::from_integer(4.into());
        let (lo, hi) = cell_range(&field, epsilon1, spec);
        let mut failure = None;
        for_each_cell(&lo, &hi, |cell| {
            if failure.is_some() {
                return;
            }
            let center = field.center_dist_sq(&cell, h).expect("nonempty support");
            if center < near_sq {
                if !field.cell_within(&cell, h, epsilon1) {
                    failure = Some(format!("excluded cell {cell} is not inside I(epsilon1)"));
                }
                near.insert(cell);
            } else {
                let d = field.min_dist_sq(&cell, h).expect("nonempty support");
                if d < half_sq {
                    failure = Some(format!("cell {cell} of K meets I(epsilon1/2)"));
                }
            }
        });
        if let Some(msg) = failure {
            return Err(Error::RegionVerification(format!("{msg}; refine the grid")));
        }
    }
    let near = near;
    Ok(RegionK {
        region: Region::CellsExcept {
            grid: spec.clone(),
            excluded: Arc::new(near.clone()),
        },
        near,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Chain;
    use crate::grid::GridSpec;
    use crate::rational::{q, ratio};
    use crate::region::restrict;

    fn square_loop(side: i64) -> Chain {
        let disk = Chain::from_terms(
            3,
            2,
            q(1),
            (0..side).flat_map(|x| (0..side).map(move |y| (CellKey::new(&[x, y, 0], &[0, 1]), q(1)))),
        )
        .unwrap();
        disk.boundary().unwrap()
    }

    #[test]
    fn square_loop_verifies_at_fine_spacing() {
        let b = square_loop(2);
        let mut b8 = b.clone();
        for _ in 0..3 {
            b8 = b8.subdivide();
        }
        let spec = GridSpec::new(3, vec![q(-3); 3], vec![q(5); 3], ratio(1, 8)).unwrap();
        let k = build_region_k(&q(1), &b8, &spec).unwrap();
        let field = DistanceField::of_chain(&b8);
        // Independent oracle: every excluded cell touches I(ε₁) only, every
        // kept cell near the loop is at least ε₁/2 away.
        for c in &k.near {
            let s = field.sup_dist_sq(c, &spec.spacing).unwrap();
            assert!(s.upper_sq < q(1));
        }
        for c in spec.cells(3) {
            if !k.near.contains(&c) {
                assert!(field.min_dist_sq(&c, &spec.spacing).unwrap() >= ratio(1, 4));
            }
        }
        assert!(!k.near.is_empty());
    }

    #[test]
    fn coarse_spacing_is_rejected() {
        let b = square_loop(2);
        let spec = GridSpec::cube(3, -4, 6, q(1)).unwrap();
        assert!(matches!(
            build_region_k(&q(1), &b, &spec),
            Err(Error::RegionVerification(_))
        ));
    }

    #[test]
    fn box_face_cells_lie_in_k() {
        let b = square_loop(1).subdivide().subdivide().subdivide();
        let spec = GridSpec::new(3, vec![q(-2); 3], vec![q(3); 3], ratio(1, 8)).unwrap();
        let k = build_region_k(&q(1), &b, &spec).unwrap();
        for c in spec.cells(3) {
            let (lo, hi) = c.lattice_box();
            let on_face = (0..3).any(|j| lo[j] == spec.lattice_min()[j] || hi[j] == spec.lattice_max()[j]);
            if on_face {
                assert!(k.region.contains_cell(&c, &spec.spacing));
            }
        }
    }

    #[test]
    fn mass_splits_exactly() {
        let b = square_loop(2).subdivide().subdivide().subdivide();
        let spec = GridSpec::new(3, vec![q(-2); 3], vec![q(4); 3], ratio(1, 8)).unwrap();
        let k = build_region_k(&q(1), &b, &spec).unwrap();
        let disk = Chain::from_terms(
            3,
            2,
            ratio(1, 8),
            (0..16).flat_map(|x| (0..16).map(move |y| (CellKey::new(&[x, y, 0], &[0, 1]), q(1)))),
        )
        .unwrap();
        let inside = restrict(&disk, &k.region);
        let outside = restrict(&disk, &k.outside());
        assert_eq!(inside.mass() + outside.mass(), disk.mass());
        assert!(!inside.is_zero() && !outside.is_zero());
    }
}
