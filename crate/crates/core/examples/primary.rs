//! One level of the primary program: a relaxed minimal surface for a square
//! loop, its witness, and the exact lower bound on the grid minimal mass.

use std::sync::Arc;

use plateau::chain::Chain;
use plateau::minimizer::{grid_minimal_mass, minimize_primary, SolveOptions};
use plateau::rational::{fmt_q, q};
use plateau::region::{DistanceField, Region};
use plateau::{CellKey, GridSpec};

fn square_loop(side: i64) -> Chain {
    let mut terms = Vec::new();
    for i in 0..side {
        terms.push((CellKey::new(&[i, 0, 0], &[0]), q(1)));
        terms.push((CellKey::new(&[side, i, 0], &[1]), q(1)));
        terms.push((CellKey::new(&[i, side, 0], &[0]), q(-1)));
        terms.push((CellKey::new(&[0, i, 0], &[1]), q(-1)));
    }
    Chain::from_terms(3, 1, q(1), terms).unwrap()
}

fn main() -> plateau::Result<()> {
    let b = square_loop(3);
    let spec = GridSpec::cube(3, -2, 5, q(1))?;
    let u = Region::within(Arc::new(DistanceField::of_chain(&b)), q(2));
    let opts = SolveOptions::default();
    let mu = grid_minimal_mass(&b, &spec, &opts)?;
    println!("grid minimal mass >= {}", fmt_q(&mu.lower_bound));
    for eps in [q(2), q(1)] {
        let out = minimize_primary(&b, &spec, &eps, &u, &opts)?;
        println!(
            "eps {}: M(T) = {}, M(S) = {}, lp = {}, integral {}, membership {}",
            fmt_q(&eps),
            fmt_q(&out.t.mass()),
            fmt_q(&out.s.mass()),
            fmt_q(&out.lp_mass),
            out.integral,
            out.membership.passed()
        );
    }
    Ok(())
}
