//! Snaps a polygonal loop onto a grid and reports how far the result moved.

use plateau::approximate::{ingest_boundary, BoundaryInput};
use plateau::rational::fmt_q;
use plateau::{CellComplex, GridSpec};

const LOOP: &str = "\
# tilted quadrilateral, traversed twice
loop mult=2
0 0 0
3/4 1/10 0
7/10 4/5 1/4
1/10 3/5 1/8
";

fn main() -> plateau::Result<()> {
    let spec = GridSpec::from_text(
        "N = 3\nbox_min = [\"-1/4\", \"-1/4\", \"-1/4\"]\nbox_max = [\"1\", \"1\", \"1/2\"]\nh = \"1/16\"\n",
    )?;
    let cx = CellComplex::build(&spec, 10_000_000)?;
    let input = BoundaryInput::from_text(LOOP)?;
    let ing = ingest_boundary(&input, &cx)?;
    println!("edges      {}", ing.cycle.len());
    println!("mass       {}", fmt_q(&ing.cycle.mass()));
    println!("moved <=   {}", fmt_q(&ing.displacement_bound));
    println!("is cycle   {}", ing.cycle.boundary()?.is_zero());
    println!("components {}", ing.diagnostics.components);
    for w in &ing.diagnostics.warnings {
        println!("warning    {w}");
    }
    Ok(())
}
