//! Grid flat norm `min { M(X) + M(Y) : T = X + ∂Y }` and top-dimensional fillings.

use std::fmt::Write as _;

use num_traits::{Signed, Zero};

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::grid::{measure, CellComplex, CellKey};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::rational::{fmt_q, Q};

#[derive(Clone, Debug)]
pub struct FlatDecomposition {
    pub value: Q,
    pub x: Chain,
    pub y: Chain,
}

impl FlatDecomposition {
    /// Chain-file text of `X` and `Y` followed by a `value=` line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "value={}", fmt_q(&self.value));
        s.push_str("# X\n");
        s.push_str(&self.x.to_text());
        s.push_str("# Y\n");
        s.push_str(&self.y.to_text());
        s
    }
}

fn check_on_complex(t: &Chain, cx: &CellComplex) -> Result<()> {
    let n = cx.dim();
    if t.dim() + 1 != n || t.ambient() != n {
        return Err(Error::Dimension(format!(
            "expected an {}-chain in R^{n}, got a {}-chain in R^{}",
            n - 1,
            t.dim(),
            t.ambient()
        )));
    }
    if !t.lives_on(cx) {
        return Err(Error::Contract("chain does not live on the complex".into()));
    }
    Ok(())
}

/// Flat-norm decomposition over the chains of the complex.
pub fn flat_norm_decompose(t: &Chain, cx: &CellComplex) -> Result<FlatDecomposition> {
    check_on_complex(t, cx)?;
    let n = cx.dim();
    let h = cx.spacing().clone();
    if t.is_zero() {
        return Ok(FlatDecomposition {
            value: Q::zero(),
            x: Chain::zero(n, n - 1, h.clone()),
            y: Chain::zero(n, n, h),
        });
    }
    let faces = cx.cells(n - 1);
    let cubes = cx.cells(n);
    // Costs are divided by h^(N-1): faces cost 1, cubes cost h.
    let mut lp = LinearProgram::new();
    for f in faces {
        lp.add_var(format!("x+ {f}"), Q::from_integer(1.into()));
        lp.add_var(format!("x- {f}"), Q::from_integer(1.into()));
    }
    let y0 = lp.num_vars();
    for c in cubes {
        lp.add_var(format!("y+ {c}"), h.clone());
        lp.add_var(format!("y- {c}"), h.clone());
    }
    let mut rows: Vec<Vec<(usize, Q)>> = (0..faces.len())
        .map(|i| {
            vec![
                (2 * i, Q::from_integer(1.into())),
                (2 * i + 1, Q::from_integer((-1).into())),
            ]
        })
        .collect();
    let d = cx.boundary_matrix(n)?;
    for (ci, col) in d.entries.iter().enumerate() {
        for &(fi, s) in col {
            let s = Q::from_integer(i64::from(s).into());
            rows[fi].push((y0 + 2 * ci, s.clone()));
            rows[fi].push((y0 + 2 * ci + 1, -s));
        }
    }
    for (f, row) in faces.iter().zip(rows) {
        lp.add_eq(row, t.coeff(f));
    }
    let sol = solve_lp(&lp, &Q::zero())?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Certification("flat norm program not solved to optimality".into()));
    }
    let mut x = Chain::zero(n, n - 1, h.clone());
    for (i, f) in faces.iter().enumerate() {
        x.add_term(f.clone(), &sol.x[2 * i] - &sol.x[2 * i + 1]);
    }
    let mut y = Chain::zero(n, n, h.clone());
    for (i, c) in cubes.iter().enumerate() {
        y.add_term(c.clone(), &sol.x[y0 + 2 * i] - &sol.x[y0 + 2 * i + 1]);
    }
    let value = x.mass() + y.mass();
    debug_assert_eq!(value, &sol.objective * measure(&h, n - 1));
    Ok(FlatDecomposition { value, x, y })
}

/// Grid flat distance between two `(N-1)`-chains.
pub fn flat_distance(a: &Chain, b: &Chain, cx: &CellComplex) -> Result<Q> {
    Ok(flat_norm_decompose(&a.sub(b)?, cx)?.value)
}

/// The unique `N`-chain `W` on the box with `∂W = g`.
///
/// Sweeps along the first axis: the face between a cube and its lower
/// neighbour carries `W(lower) - W(cube)`, and cubes on the lower box face
/// have no lower neighbour.
pub fn fill_top(g: &Chain, cx: &CellComplex) -> Result<Chain> {
    check_on_complex(g, cx)?;
    let n = cx.dim();
    let h = cx.spacing().clone();
    let bg = g.boundary()?;
    if !bg.is_zero() {
        return Err(Error::NotACycle {
            offending: bg.support().iter().map(CellKey::to_string).collect(),
        });
    }
    let mut w = Chain::zero(n, n, h);
    // Cells are sorted by anchor, so every lower neighbour along axis 0 is
    // processed before the cell itself.
    let mut cubes: Vec<&CellKey> = cx.cells(n).iter().collect();
    cubes.sort_by(|a, b| a.anchor[0].cmp(&b.anchor[0]).then_with(|| a.cmp(b)));
    let lower_face_axes: Vec<u8> = (1..n as u8).collect();
    for c in cubes {
        let face = CellKey::new(&c.anchor, &lower_face_axes);
        let mut below = c.anchor.clone();
        below[0] -= 1;
        let below = CellKey::new(&below, &c.axes);
        let value = w.coeff(&below) - g.coeff(&face);
        w.add_term(c.clone(), value);
    }
    if w.boundary()? != *g {
        return Err(Error::Contract(
            "cycle is not the boundary of a chain on the box".into(),
        ));
    }
    Ok(w)
}

/// Bound on `|W_c|` for the filling of `g`: the largest sum of `|g_f|` over
/// the faces of one axis-0 column, since `W_c` telescopes from the box face.
pub fn filling_coefficient_bound(g: &Chain) -> Q {
    use std::collections::BTreeMap;
    let n = g.ambient();
    let mut columns: BTreeMap<Vec<i64>, Q> = BTreeMap::new();
    for (k, v) in g.iter() {
        if k.spans(0) {
            continue;
        }
        let key: Vec<i64> = k.anchor[1..n].to_vec();
        *columns.entry(key).or_insert_with(Q::zero) += v.abs();
    }
    columns.into_values().max().unwrap_or_else(Q::zero)
}

/// Sweeps a chain along `axis` down to the hyperplane `x_axis = lo`:
/// every cell not spanning `axis` is extruded over `[lo, anchor]`.
fn prism(c: &Chain, axis: usize, lo: i64) -> Result<Chain> {
    let mut out = Chain::zero(c.ambient(), c.dim() + 1, c.spacing().clone());
    for (k, v) in c.iter() {
        if k.spans(axis) {
            continue;
        }
        if k.anchor[axis] < lo {
            return Err(Error::Contract(format!("cell {k} lies below the sweep plane")));
        }
        let before = k.axes.iter().filter(|&&a| (a as usize) < axis).count();
        let coeff = if before % 2 == 0 { v.clone() } else { -v.clone() };
        let mut axes: Vec<u8> = k.axes.to_vec();
        axes.push(axis as u8);
        for t in lo..k.anchor[axis] {
            let mut anchor = k.anchor.clone();
            anchor[axis] = t;
            out.add_term(CellKey::new(&anchor, &axes), coeff.clone());
        }
    }
    Ok(out)
}

/// Moves every cell not spanning `axis` onto `x_axis = lo`; drops the rest.
fn project(c: &Chain, axis: usize, lo: i64) -> Chain {
    let mut out = Chain::zero(c.ambient(), c.dim(), c.spacing().clone());
    for (k, v) in c.iter() {
        if k.spans(axis) {
            continue;
        }
        let mut key = k.clone();
        key.anchor[axis] = lo;
        out.add_term(key, v.clone());
    }
    out
}

/// An integral chain `X` with `∂X = b` for a cycle `b` in the box of the complex,
/// built from successive axis sweeps toward the lower box corner.
pub fn sweep_filling(b: &Chain, cx: &CellComplex) -> Result<Chain> {
    let bd = if b.dim() > 0 { b.boundary()? } else { Chain::zero(b.ambient(), 0, b.spacing().clone()) };
    if !bd.is_zero() {
        return Err(Error::NotACycle {
            offending: bd.support().iter().map(CellKey::to_string).collect(),
        });
    }
    let lo = cx.spec().lattice_min();
    let mut total = Chain::zero(b.ambient(), b.dim() + 1, b.spacing().clone());
    let mut rest = b.clone();
    for axis in 0..b.ambient() {
        if rest.is_zero() {
            break;
        }
        let p = prism(&rest, axis, lo[axis])?;
        let projected = project(&rest, axis, lo[axis]);
        let target = rest.sub(&projected)?;
        let dp = p.boundary()?;
        let p = if dp == target {
            p
        } else if dp == target.neg() {
            p.neg()
        } else {
            return Err(Error::Contract("sweep filling failed to telescope".into()));
        };
        total = total.add(&p)?;
        rest = projected;
    }
    if !rest.is_zero() || total.boundary()? != *b {
        return Err(Error::Contract("cycle does not bound in the box".into()));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridSpec};
    use crate::rational::q;
    use proptest::prelude::*;

    fn cube_chain(cells: &[(&[i64], i64)]) -> Chain {
        Chain::from_terms(
            3,
            3,
            q(1),
            cells
                .iter()
                .map(|(a, c)| (CellKey::new(a, &[0, 1, 2]), q(*c))),
        )
        .unwrap()
    }

    #[test]
    fn zero_chain() {
        let cx = build_grid(&GridSpec::cube(3, 0, 1, q(1)).unwrap()).unwrap();
        let d = flat_norm_decompose(&Chain::zero(3, 2, q(1)), &cx).unwrap();
        assert_eq!(d.value, q(0));
        assert!(d.x.is_zero() && d.y.is_zero());
    }

    #[test]
    fn boundary_of_unit_cube() {
        let cx = build_grid(&GridSpec::cube(3, 0, 1, q(1)).unwrap()).unwrap();
        let t = cube_chain(&[(&[0, 0, 0], 1)]).boundary().unwrap();
        let d = flat_norm_decompose(&t, &cx).unwrap();
        assert_eq!(d.value, q(1));
        assert!(d.x.is_zero());
        assert_eq!(d.y, cube_chain(&[(&[0, 0, 0], 1)]));
        assert_eq!(d.x.add(&d.y.boundary().unwrap()).unwrap(), t);
    }

    #[test]
    fn boundary_of_side_four_cube() {
        let cx = build_grid(&GridSpec::cube(3, 0, 4, q(1)).unwrap()).unwrap();
        let w = Chain::from_terms(
            3,
            3,
            q(1),
            cx.cells(3).iter().map(|c| (c.clone(), q(1))),
        )
        .unwrap();
        let t = w.boundary().unwrap();
        assert_eq!(t.mass(), q(96));
        let d = flat_norm_decompose(&t, &cx).unwrap();
        assert_eq!(d.value, q(64));
    }

    #[test]
    fn fill_round_trip_examples() {
        let cx = build_grid(&GridSpec::cube(3, 0, 2, q(1)).unwrap()).unwrap();
        let one = cube_chain(&[(&[0, 0, 0], 1)]);
        assert_eq!(fill_top(&one.boundary().unwrap(), &cx).unwrap(), one);
        assert!(fill_top(&Chain::zero(3, 2, q(1)), &cx).unwrap().is_zero());
        let two = cube_chain(&[(&[0, 0, 0], 1), (&[1, 0, 0], 2)]);
        assert_eq!(fill_top(&two.boundary().unwrap(), &cx).unwrap(), two);
    }

    #[test]
    fn sweep_filling_of_square_loop() {
        let cx = build_grid(&GridSpec::cube(3, -2, 4, q(1)).unwrap()).unwrap();
        let disk = Chain::from_terms(
            3,
            2,
            q(1),
            (0..2).flat_map(|x| (0..2).map(move |y| (CellKey::new(&[x, y, 1], &[0, 1]), q(1)))),
        )
        .unwrap();
        let b = disk.boundary().unwrap();
        let x = sweep_filling(&b, &cx).unwrap();
        assert_eq!(x.boundary().unwrap(), b);
        assert!(x.is_integral());
        let tilted = Chain::from_terms(
            3,
            2,
            q(1),
            [
                (CellKey::new(&[0, 0, 0], &[1, 2]), q(2)),
                (CellKey::new(&[1, 1, 1], &[0, 2]), q(-1)),
            ],
        )
        .unwrap();
        let b = tilted.boundary().unwrap();
        assert_eq!(sweep_filling(&b, &cx).unwrap().boundary().unwrap(), b);
    }

    #[test]
    fn fill_rejects_non_cycle() {
        let cx = build_grid(&GridSpec::cube(3, 0, 1, q(1)).unwrap()).unwrap();
        let sq = Chain::from_terms(3, 2, q(1), [(CellKey::new(&[0, 0, 0], &[0, 1]), q(1))]).unwrap();
        assert!(matches!(fill_top(&sq, &cx), Err(Error::NotACycle { .. })));
    }

    fn arb_cubes() -> impl Strategy<Value = Chain> {
        proptest::collection::vec(((0i64..3, 0i64..3, 0i64..2), -2i64..=2), 0..10).prop_map(|v| {
            Chain::from_terms(
                3,
                3,
                q(1),
                v.into_iter()
                    .map(|((x, y, z), c)| (CellKey::new(&[x, y, z], &[0, 1, 2]), q(c))),
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn fill_inverts_boundary(w in arb_cubes()) {
            let cx = build_grid(&GridSpec::new(3, vec![q(0); 3], vec![q(3), q(3), q(2)], q(1)).unwrap()).unwrap();
            let g = w.boundary().unwrap();
            prop_assert_eq!(fill_top(&g, &cx).unwrap(), w.clone());
            prop_assert!(w.max_abs() <= filling_coefficient_bound(&g));
        }

        #[test]
        fn flat_norm_at_most_mass(w in arb_cubes(), extra in 0i64..2) {
            let cx = build_grid(&GridSpec::new(3, vec![q(0); 3], vec![q(3), q(3), q(2)], q(1)).unwrap()).unwrap();
            let mut t = w.boundary().unwrap();
            t.add_term(CellKey::new(&[0, 0, 0], &[0, 1]), q(extra));
            let d = flat_norm_decompose(&t, &cx).unwrap();
            prop_assert!(d.value <= t.mass());
            prop_assert_eq!(d.x.add(&d.y.boundary().unwrap()).unwrap(), t);
        }
    }
}
