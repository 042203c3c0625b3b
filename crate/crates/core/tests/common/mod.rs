#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use plateau::chain::Chain;
use plateau::rational::{ratio, Q};
use plateau::CellKey;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// Counterclockwise lattice square loop of `side` cells in the plane `z = 0`.
pub fn square_loop(corner: [i64; 2], side: i64, h: Q) -> Chain {
    let mut terms = Vec::new();
    let [x0, y0] = corner;
    for i in 0..side {
        terms.push((CellKey::new(&[x0 + i, y0, 0], &[0]), qi(1)));
        terms.push((CellKey::new(&[x0 + side, y0 + i, 0], &[1]), qi(1)));
        terms.push((CellKey::new(&[x0 + i, y0 + side, 0], &[0]), qi(-1)));
        terms.push((CellKey::new(&[x0, y0 + i, 0], &[1]), qi(-1)));
    }
    Chain::from_terms(3, 1, h, terms).unwrap()
}

/// The `side × side` flat disk at height `z` spanning [`square_loop`].
pub fn flat_disk(corner: [i64; 2], side: i64, z: i64, h: Q) -> Chain {
    let mut terms = Vec::new();
    for i in 0..side {
        for j in 0..side {
            terms.push((CellKey::new(&[corner[0] + i, corner[1] + j, z], &[0, 1]), qi(1)));
        }
    }
    Chain::from_terms(3, 2, h, terms).unwrap()
}

/// Integer boundary of an integer chain, computed from cell faces alone.
pub fn int_boundary(c: &BTreeMap<CellKey, i64>) -> BTreeMap<CellKey, i64> {
    let mut out = BTreeMap::new();
    for (k, &v) in c {
        for (f, s) in k.faces() {
            *out.entry(f).or_insert(0) += v * i64::from(s);
        }
    }
    out.retain(|_, v| *v != 0);
    out
}

pub fn half() -> Q {
    ratio(1, 2)
}
