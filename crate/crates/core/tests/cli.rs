mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::{flat_disk, qi, square_loop};
use plateau::chain::Chain;
use plateau::cli::{export_csv, export_obj, import_csv};
use plateau::rational::ratio;
use plateau::CellKey;
use proptest::prelude::*;

fn plateau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plateau"))
        .args(args)
        .env_remove("PLATEAU_MAX_LEVEL")
        .env_remove("PLATEAU_LP_ITERATIONS")
        .env_remove("PLATEAU_BNB_NODES")
        .env_remove("PLATEAU_CELL_LIMIT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const SMALL_GRID: &str = r#"N = 3
box_min = ["0", "0", "-1"]
box_max = ["4", "4", "1"]
h = "1/2"
"#;

fn small_config(epsilon1: &str) -> String {
    format!(
        r#"epsilon = "4"
epsilon1 = "{epsilon1}"
kappa = "1"
U = "3"

[grid]
{SMALL_GRID}"#
    )
}

#[test]
fn help_lists_every_subcommand() {
    let o = plateau(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for cmd in ["grid", "ingest", "minimize", "flatnorm", "fill", "run", "export"] {
        assert!(text.contains(cmd), "missing {cmd} in help");
    }
}

#[test]
fn grid_reports_cell_counts() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid.toml");
    fs::write(&g, SMALL_GRID).unwrap();
    let o = plateau(&["grid", p(&g)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    // 8 x 8 x 4 cubes at h = 1/2.
    assert!(text.contains("cells[3]=256"), "{text}");
    assert!(text.contains("cells[0]=405"), "{text}");
}

#[test]
fn ingest_flatnorm_and_fill() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid.toml");
    fs::write(&g, SMALL_GRID).unwrap();
    let b = dir.path().join("loop.txt");
    fs::write(&b, "loop mult=1\n1 1 0\n2 1 0\n2 2 0\n1 2 0\n").unwrap();
    let out = dir.path().join("b.chain");
    let o = plateau(&["ingest", "--grid", p(&g), "--boundary", p(&b), "-o", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cycle = Chain::from_text(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(cycle, square_loop([2, 2], 2, ratio(1, 2)));
    assert!(stdout(&o).contains("mass=4"));

    // The spanning disk and its flat norm: a unit square is cheapest as itself.
    let disk = dir.path().join("disk.chain");
    fs::write(&disk, flat_disk([2, 2], 2, 0, ratio(1, 2)).to_text()).unwrap();
    let dec = dir.path().join("dec.txt");
    let o = plateau(&["flatnorm", "--grid", p(&g), p(&disk), "-o", p(&dec)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("flat_norm=1"), "{}", stdout(&o));
    assert!(fs::read_to_string(&dec).unwrap().starts_with("value=1\n"));

    // Two parallel disks: keeping the 16 faces (mass 2) beats filling the slab (1/2 + 2).
    let lifted = dir.path().join("lifted.chain");
    fs::write(&lifted, flat_disk([2, 2], 2, 1, ratio(1, 2)).to_text()).unwrap();
    let o = plateau(&["flatnorm", "--grid", p(&g), p(&disk), "--minus", p(&lifted)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("flat_norm=2\n"), "{}", stdout(&o));
}

#[test]
fn fill_of_a_cube_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("grid.toml");
    fs::write(&g, SMALL_GRID).unwrap();
    let cube = Chain::from_terms(3, 3, ratio(1, 2), [(CellKey::new(&[1, 1, 0], &[0, 1, 2]), qi(-2))]).unwrap();
    let c = dir.path().join("c.chain");
    fs::write(&c, cube.boundary().unwrap().to_text()).unwrap();
    let w = dir.path().join("w.chain");
    let o = plateau(&["fill", "--grid", p(&g), p(&c), "-o", p(&w)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(Chain::from_text(&fs::read_to_string(&w).unwrap()).unwrap(), cube);
}

#[test]
fn minimize_writes_surface_and_bridge() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, small_config("1/2")).unwrap();
    let b = dir.path().join("loop.txt");
    fs::write(&b, "loop mult=1\n1 1 0\n3 1 0\n3 3 0\n1 3 0\n").unwrap();
    let t = dir.path().join("t.chain");
    let s = dir.path().join("s.chain");
    let o = plateau(&["minimize", "--config", p(&cfg), "--boundary", p(&b), "--out-t", p(&t), "--out-s", p(&s)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = Chain::from_text_in(&fs::read_to_string(&t).unwrap(), 3).unwrap();
    let s = Chain::from_text_in(&fs::read_to_string(&s).unwrap(), 3).unwrap();
    assert_eq!(t.add(&s).unwrap().boundary().unwrap(), square_loop([2, 2], 4, ratio(1, 2)));
    // mu = 4, eps_1 = 1/2.
    let m = t.mass();
    assert!(m >= ratio(7, 2) && m <= qi(5), "mass {m}");
}

#[test]
fn run_on_empty_boundary_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, small_config("1/2")).unwrap();
    let b = dir.path().join("empty.txt");
    fs::write(&b, "# nothing here\n").unwrap();
    let out = dir.path().join("out");
    let o = plateau(&["run", "--config", p(&cfg), "--boundary", p(&b), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t = Chain::from_text(&fs::read_to_string(out.join("T_prime.chain")).unwrap()).unwrap();
    assert!(t.is_zero());
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("CERTIFIED"));
    assert!(out.join("iterations.csv").exists());
    assert!(out.join("witness_S.chain").exists());
}

#[test]
fn config_violation_exits_4_naming_the_bullet() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    // epsilon1 = epsilon / 3
    fs::write(&cfg, small_config("4/3")).unwrap();
    let b = dir.path().join("loop.txt");
    fs::write(&b, "loop mult=1\n1 1 0\n3 1 0\n3 3 0\n1 3 0\n").unwrap();
    let out = dir.path().join("out");
    let o = plateau(&["run", "--config", p(&cfg), "--boundary", p(&b), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("bullet 1"), "{}", stderr(&o));
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, small_config("1/2")).unwrap();
    let b = dir.path().join("bad.txt");
    fs::write(&b, "loop mult=one\n0 0 0\n").unwrap();
    let out = dir.path().join("out");
    let o = plateau(&["run", "--config", p(&cfg), "--boundary", p(&b), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = plateau(&["run", "--config", p(&dir.path().join("missing.toml")), "--boundary", p(&b), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let o = plateau(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cell_limit_from_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    fs::write(&cfg, small_config("1/2")).unwrap();
    let b = dir.path().join("empty.txt");
    fs::write(&b, "").unwrap();
    let out = dir.path().join("out");
    let args = ["run", "--config", p(&cfg), "--boundary", p(&b), "--out-dir", p(&out)];
    let o = Command::new(env!("CARGO_BIN_EXE_plateau"))
        .args(args)
        .env("PLATEAU_CELL_LIMIT", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_plateau"))
        .args(args)
        .arg("--cell-limit")
        .arg("1000000")
        .env("PLATEAU_CELL_LIMIT", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

/// Parses an OBJ back into vertex positions and faces (expanding repeats).
fn parse_obj(text: &str) -> (Vec<[f64; 3]>, Vec<Vec<usize>>) {
    let mut v = Vec::new();
    let mut f = Vec::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|x| x.parse().unwrap()).collect();
                v.push([c[0], c[1], c[2]]);
            }
            Some("f") => f.push(it.map(|x| x.parse().unwrap()).collect()),
            _ => {}
        }
    }
    (v, f)
}

#[test]
fn obj_of_a_single_square() {
    let c = flat_disk([0, 0], 1, 0, qi(1));
    let (v, f) = parse_obj(&export_obj(&c).unwrap());
    assert_eq!(v.len(), 4);
    assert_eq!(f, vec![vec![1, 2, 3, 4]]);
    assert_eq!(v[2], [1.0, 1.0, 0.0]);
}

#[test]
fn obj_of_empty_chain() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("empty.chain");
    fs::write(&c, "dim=2 h=1\n").unwrap();
    let obj = dir.path().join("empty.obj");
    let o = plateau(&["export", p(&c), "--format", "obj", "-o", p(&obj)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (v, f) = parse_obj(&fs::read_to_string(&obj).unwrap());
    assert!(v.is_empty() && f.is_empty());
}

#[test]
fn obj_of_flat_disk_has_open_boundary_of_4l_edges() {
    for l in [1, 3, 5] {
        let (v, f) = parse_obj(&export_obj(&flat_disk([0, 0], l, 2, ratio(1, 4))).unwrap());
        assert_eq!(f.len() as i64, l * l);
        assert_eq!(v.len() as i64, (l + 1) * (l + 1));
        let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for face in &f {
            for i in 0..4 {
                let (a, b) = (face[i], face[(i + 1) % 4]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let open = edges.values().filter(|&&n| n == 1).count() as i64;
        assert_eq!(open, 4 * l);
    }
}

#[test]
fn obj_repeats_faces_by_multiplicity_and_rejects_other_dimensions() {
    let c = Chain::from_terms(3, 2, qi(1), [(CellKey::new(&[0, 0, 0], &[1, 2]), qi(-3))]).unwrap();
    let text = export_obj(&c).unwrap();
    assert!(text.contains("# multiplicity 3"));
    let (v, f) = parse_obj(&text);
    assert_eq!(f.len(), 3);
    // Negative orientation walks the square from anchor + e_2 back to the anchor.
    let corners: Vec<[f64; 3]> = f[0].iter().map(|&i| v[i - 1]).collect();
    assert_eq!(corners, vec![[0.0, 0.0, 1.0], [0.0, 1.0, 1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
    assert!(export_obj(&square_loop([0, 0], 1, qi(1))).is_err());
}

fn arb_chain() -> impl Strategy<Value = Chain> {
    let cell = (prop::collection::vec(-5i64..5, 3), 0usize..3, -7i64..7, 1i64..4);
    (prop::collection::vec(cell, 0..12), 0usize..3).prop_map(|(cells, dim)| {
        let subsets: [&[u8]; 3] = match dim {
            0 => [&[], &[], &[]],
            1 => [&[0], &[1], &[2]],
            _ => [&[0, 1], &[0, 2], &[1, 2]],
        };
        let terms = cells
            .into_iter()
            .map(|(a, s, n, d)| (CellKey::new(&a, subsets[s]), ratio(n, d)));
        Chain::from_terms(3, dim, ratio(1, 8), terms).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn csv_round_trip_is_exact(c in arb_chain()) {
        let text = export_csv(&c);
        prop_assert_eq!(import_csv(&text).unwrap(), c.clone());
        // Rows follow the lexicographic cell order.
        prop_assert_eq!(text.lines().count(), c.len() + 2);
    }
}

#[test]
fn export_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("d.chain");
    fs::write(&c, flat_disk([0, 0], 3, 0, qi(1)).to_text()).unwrap();
    let mut outs = Vec::new();
    for fmt in ["obj", "csv", "obj", "csv"] {
        let out = dir.path().join(format!("o.{fmt}"));
        let o = plateau(&["export", p(&c), "--format", fmt, "-o", p(&out)]);
        assert!(o.status.success());
        outs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[2]);
    assert_eq!(outs[1], outs[3]);
}
