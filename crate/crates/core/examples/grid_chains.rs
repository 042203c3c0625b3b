//! Builds a small box grid, takes boundaries of chains and checks that the
//! boundary of a boundary vanishes, both on chains and on incidence matrices.

use plateau::chain::Chain;
use plateau::rational::{fmt_q, q};
use plateau::{CellComplex, CellKey, GridSpec};

fn main() -> plateau::Result<()> {
    let spec = GridSpec::cube(3, 0, 3, q(1))?;
    let cx = CellComplex::build(&spec, 1_000_000)?;
    for k in 1..=3 {
        println!("{}-cells: {}", k, spec.cell_count(k));
    }

    // Two unit cubes stacked along z, the lower one with multiplicity 2.
    let w = Chain::from_terms(
        3,
        3,
        q(1),
        [
            (CellKey::new(&[1, 1, 0], &[0, 1, 2]), q(2)),
            (CellKey::new(&[1, 1, 1], &[0, 1, 2]), q(1)),
        ],
    )?;
    let dw = w.boundary()?;
    println!("M(W) = {}, M(dW) = {}, faces = {}", fmt_q(&w.mass()), fmt_q(&dw.mass()), dw.len());
    println!("ddW = 0: {}", dw.boundary()?.is_zero());

    let top = cx.boundary_matrix(3)?;
    let next = cx.boundary_matrix(2)?;
    println!(
        "boundary matrices {}x{} and {}x{}, product is zero: {}",
        top.rows.len(),
        top.cols.len(),
        next.rows.len(),
        next.cols.len(),
        next.compose(&top).is_empty()
    );
    print!("{}", dw.to_text());
    Ok(())
}
