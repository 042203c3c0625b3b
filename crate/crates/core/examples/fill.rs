//! Recovers a top-dimensional chain from its boundary.

use plateau::chain::Chain;
use plateau::flatnorm::fill_top;
use plateau::rational::q;
use plateau::{CellComplex, CellKey, GridSpec};

fn main() -> plateau::Result<()> {
    let cx = CellComplex::build(&GridSpec::cube(3, 0, 4, q(1))?, 1_000_000)?;
    // An L-shaped block with mixed multiplicities.
    let w = Chain::from_terms(
        3,
        3,
        q(1),
        [
            (CellKey::new(&[0, 0, 0], &[0, 1, 2]), q(1)),
            (CellKey::new(&[1, 0, 0], &[0, 1, 2]), q(3)),
            (CellKey::new(&[1, 1, 0], &[0, 1, 2]), q(-2)),
            (CellKey::new(&[1, 1, 1], &[0, 1, 2]), q(1)),
        ],
    )?;
    let g = w.boundary()?;
    let filled = fill_top(&g, &cx)?;
    println!("boundary has {} faces", g.len());
    println!("filling equals the original: {}", filled == w);
    print!("{}", filled.to_text());
    Ok(())
}
