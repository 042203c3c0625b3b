//! The whole certified loop on the bundled square-loop fixture. Takes about
//! a minute in release mode.

use std::path::Path;

use plateau::approximate::BoundaryInput;
use plateau::minimizer::{certification_report, iteration_csv, run_algorithm, AlgorithmConfig};

fn main() -> plateau::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let cfg = AlgorithmConfig::from_text(&std::fs::read_to_string(dir.join("square_loop.toml"))?, Some(&dir))?;
    let input = BoundaryInput::from_text(&std::fs::read_to_string(dir.join("square_loop.txt"))?)?;
    let result = run_algorithm(&cfg, &input)?;
    print!("{}", iteration_csv(&result.records));
    print!("{}", certification_report(&result));
    Ok(())
}
