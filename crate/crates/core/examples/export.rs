//! Writes a surface with multiplicities as Wavefront OBJ and as CSV, then
//! reads the CSV back.

use plateau::chain::Chain;
use plateau::cli::{export_csv, export_obj, import_csv};
use plateau::rational::{q, ratio};
use plateau::CellKey;

fn main() -> plateau::Result<()> {
    let h = ratio(1, 4);
    let mut t = Chain::zero(3, 2, h);
    for i in 0..3 {
        for j in 0..2 {
            t.add_term(CellKey::new(&[i, j, 0], &[0, 1]), q(1));
        }
    }
    t.add_term(CellKey::new(&[1, 0, 0], &[0, 1]), q(-3));
    print!("{}", export_obj(&t)?);
    let csv = export_csv(&t);
    print!("{csv}");
    println!("csv round trip: {}", import_csv(&csv)? == t);
    Ok(())
}
