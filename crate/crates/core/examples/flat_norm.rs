//! Flat norm of the boundary of a cube as the side grows: small cubes are
//! cheaper to keep as surface, large ones cheaper to fill.

use plateau::chain::Chain;
use plateau::flatnorm::flat_norm_decompose;
use plateau::rational::{fmt_q, q};
use plateau::{CellComplex, CellKey, GridSpec};

fn main() -> plateau::Result<()> {
    println!("side  area  volume  flat  kept-area  filled");
    for s in [1i64, 2, 4, 6, 7, 8] {
        let cx = CellComplex::build(&GridSpec::cube(3, -1, s + 1, q(1))?, 1_000_000)?;
        let mut cube = Chain::zero(3, 3, q(1));
        for x in 0..s {
            for y in 0..s {
                for z in 0..s {
                    cube.add_term(CellKey::new(&[x, y, z], &[0, 1, 2]), q(1));
                }
            }
        }
        let t = cube.boundary()?;
        let dec = flat_norm_decompose(&t, &cx)?;
        println!(
            "{s:>4}  {:>4}  {:>6}  {:>4}  {:>9}  {:>6}",
            fmt_q(&t.mass()),
            fmt_q(&cube.mass()),
            fmt_q(&dec.value),
            fmt_q(&dec.x.mass()),
            fmt_q(&dec.y.mass())
        );
    }
    Ok(())
}
