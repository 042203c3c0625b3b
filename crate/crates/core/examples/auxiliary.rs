//! The auxiliary integer program for a flat disk: the least mass of a
//! competitor that is far in flat norm from the disk.

use plateau::chain::Chain;
use plateau::minimizer::{minimize_auxiliary, AuxiliaryOptions};
use plateau::rational::{fmt_q, q, ratio};
use plateau::{CellComplex, CellKey, GridSpec};

fn main() -> plateau::Result<()> {
    let cx = CellComplex::build(&GridSpec::cube(3, 0, 2, q(1))?, 1_000_000)?;
    let disk = Chain::from_terms(
        3,
        2,
        q(1),
        (0..2).flat_map(|i| (0..2).map(move |j| (CellKey::new(&[i, j, 1], &[0, 1]), q(1)))),
    )?;
    let opts = AuxiliaryOptions {
        node_limit: 20_000,
        cap_margin: q(40),
    };
    for epsilon in [1, 2, 4] {
        let out = minimize_auxiliary(&disk, &cx, &ratio(1, 4), &q(epsilon), &opts)?;
        println!(
            "epsilon {epsilon}: least competitor mass {} ({} nodes), at least M(disk) = {}: {}",
            out.mass,
            out.nodes,
            fmt_q(&disk.mass()),
            out.mass.at_least(&disk.mass())
        );
    }
    Ok(())
}
