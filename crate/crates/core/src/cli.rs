//! Command-line front end.
//!
//! Exit codes: 0 success (for `run`, certified termination), 1 a run that
//! ended without a certificate or any other failure, 2 unreadable or
//! malformed input, 3 a resource limit, 4 a configuration or grid error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Signed;

use crate::approximate::{ingest_boundary, BoundaryInput};
use crate::chain::Chain;
use crate::error::{Error, ParseError, Result};
use crate::flatnorm::{fill_top, flat_norm_decompose};
use crate::grid::{CellComplex, CellKey, GridSpec};
use crate::minimizer::{
    certification_report, iteration_csv, minimize_primary, run_algorithm, AlgorithmConfig, RunResult, SolveOptions,
};
use crate::minimizer::primary::shared_field;
use crate::rational::{fmt_q, parse_q, to_f64, Q};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "plateau", version, about = "Certified area-minimizing surfaces on cubical grids")]
pub struct Cli {
    /// Print progress details on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(flatten)]
    pub limits: LimitOverrides,

    #[command(subcommand)]
    pub command: Command,
}

/// Overrides for the `[limits]` table of a config file.
#[derive(Debug, Clone, Default, Args)]
pub struct LimitOverrides {
    #[arg(long, global = true, env = "PLATEAU_MAX_LEVEL")]
    pub max_level: Option<usize>,
    #[arg(long, global = true, env = "PLATEAU_LP_ITERATIONS")]
    pub lp_iterations: Option<usize>,
    #[arg(long, global = true, env = "PLATEAU_BNB_NODES")]
    pub bnb_nodes: Option<usize>,
    #[arg(long, global = true, env = "PLATEAU_CELL_LIMIT")]
    pub cell_limit: Option<u64>,
}

impl LimitOverrides {
    pub fn apply(&self, cfg: &mut AlgorithmConfig) {
        if let Some(v) = self.max_level {
            cfg.limits.max_level = v;
        }
        if let Some(v) = self.lp_iterations {
            cfg.limits.lp_iterations = v;
        }
        if let Some(v) = self.bnb_nodes {
            cfg.limits.bnb_nodes = v;
        }
        if let Some(v) = self.cell_limit {
            cfg.limits.cell_limit = v;
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a grid spec and print its cell counts.
    Grid {
        /// Grid spec (TOML with N, box_min, box_max, h).
        grid: PathBuf,
    },
    /// Snap a polyline or chain boundary onto a grid and write the cycle.
    Ingest {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Solve the bridged minimization at one level of a config's schedule.
    Minimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long, default_value_t = 1)]
        level: usize,
        /// Output chain for the surface.
        #[arg(long)]
        out_t: PathBuf,
        /// Output chain for the bridge.
        #[arg(long)]
        out_s: Option<PathBuf>,
    },
    /// Flat norm of a chain (or of the difference of two) with its decomposition.
    Flatnorm {
        #[arg(long)]
        grid: PathBuf,
        chain: PathBuf,
        /// Subtract this chain first.
        #[arg(long)]
        minus: Option<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Top-dimensional filling of an (N-1)-cycle.
    Fill {
        #[arg(long)]
        grid: PathBuf,
        chain: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Full multilevel run with certification.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        /// Directory for T_prime.chain, witness_S.chain, iterations.csv and report.txt.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Export a chain as an OBJ mesh or a CSV table.
    Export {
        chain: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Obj,
    Csv,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) => EXIT_PARSE,
        Error::Resource(_) | Error::CellLimit { .. } => EXIT_RESOURCE,
        Error::Config(_) | Error::InvalidGrid(_) => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn load_config(path: &Path, limits: &LimitOverrides) -> Result<AlgorithmConfig> {
    let mut cfg = AlgorithmConfig::from_text(&read(path)?, path.parent())?;
    limits.apply(&mut cfg);
    Ok(cfg)
}

fn load_grid(path: &Path, limits: &LimitOverrides) -> Result<CellComplex> {
    let spec = GridSpec::from_text(&read(path)?)?;
    let limit = limits.cell_limit.unwrap_or(crate::minimizer::Limits::default().cell_limit);
    CellComplex::build(&spec, limit)
}

fn load_chain(path: &Path, ambient: usize) -> Result<Chain> {
    Chain::from_text_in(&read(path)?, ambient)
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    let mut stdout = String::new();
    let code = match execute(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    print!("{stdout}");
    code
}

/// Runs one command, appending its summary to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut String) -> Result<i32> {
    let verbose = cli.verbose > 0;
    match &cli.command {
        Command::Grid { grid } => {
            let cx = load_grid(grid, &cli.limits)?;
            let spec = cx.spec();
            let _ = writeln!(stdout, "N={} h={}", spec.dim, fmt_q(&spec.spacing));
            for k in 0..=spec.dim {
                let _ = writeln!(stdout, "cells[{k}]={}", spec.cell_count(k));
            }
            let _ = writeln!(stdout, "stored={}", spec.stored_cell_count());
            Ok(EXIT_OK)
        }
        Command::Ingest { grid, boundary, out } => {
            let cx = load_grid(grid, &cli.limits)?;
            let input = BoundaryInput::from_text(&read(boundary)?)?;
            let ing = ingest_boundary(&input, &cx)?;
            write(out, &ing.cycle.to_text())?;
            let _ = writeln!(stdout, "mass={}", fmt_q(&ing.cycle.mass()));
            let _ = writeln!(stdout, "cells={}", ing.cycle.len());
            let _ = writeln!(stdout, "displacement<={}", fmt_q(&ing.displacement_bound));
            let _ = writeln!(stdout, "components={}", ing.diagnostics.components);
            Ok(EXIT_OK)
        }
        Command::Minimize {
            config,
            boundary,
            level,
            out_t,
            out_s,
        } => {
            let cfg = load_config(config, &cli.limits)?;
            let cx1 = CellComplex::build(&cfg.grid, cfg.limits.cell_limit)?;
            let input = BoundaryInput::from_text(&read(boundary)?)?;
            let mut b = ingest_boundary(&input, &cx1)?.cycle;
            drop(cx1);
            cfg.validate(Some(&b))?;
            for _ in 1..*level {
                b = b.subdivide();
            }
            let eps = cfg.epsilon_at(*level);
            let spec = cfg.grid_at(*level);
            let u = cfg.neighborhood_region(shared_field(&b));
            let opts = SolveOptions {
                lp_iterations: cfg.limits.lp_iterations,
                cell_limit: cfg.limits.cell_limit,
            };
            let out = minimize_primary(&b, &spec, &eps, &u, &opts)?;
            write(out_t, &out.t.to_text())?;
            if let Some(p) = out_s {
                write(p, &out.s.to_text())?;
            }
            let _ = writeln!(stdout, "level={level} eps={} h={}", fmt_q(&eps), fmt_q(&spec.spacing));
            let _ = writeln!(stdout, "mass_T={}", fmt_q(&out.t.mass()));
            let _ = writeln!(stdout, "mass_S={}", fmt_q(&out.s.mass()));
            let _ = writeln!(stdout, "lp_mass={}", fmt_q(&out.lp_mass));
            let _ = writeln!(stdout, "lower_bound={}", fmt_q(&out.lower_bound));
            let _ = writeln!(stdout, "integral={} rounded={}", out.integral, out.rounded);
            let _ = writeln!(stdout, "membership={}", out.membership.passed());
            Ok(if out.membership.passed() { EXIT_OK } else { EXIT_FAILED })
        }
        Command::Flatnorm {
            grid,
            chain,
            minus,
            out,
        } => {
            let cx = load_grid(grid, &cli.limits)?;
            let mut t = load_chain(chain, cx.dim())?;
            if let Some(m) = minus {
                t = t.sub(&load_chain(m, cx.dim())?)?;
            }
            let dec = flat_norm_decompose(&t, &cx)?;
            if let Some(p) = out {
                write(p, &dec.to_text())?;
            }
            let _ = writeln!(stdout, "flat_norm={}", fmt_q(&dec.value));
            Ok(EXIT_OK)
        }
        Command::Fill { grid, chain, out } => {
            let cx = load_grid(grid, &cli.limits)?;
            let g = load_chain(chain, cx.dim())?;
            let w = fill_top(&g, &cx)?;
            write(out, &w.to_text())?;
            let _ = writeln!(stdout, "mass={}", fmt_q(&w.mass()));
            Ok(EXIT_OK)
        }
        Command::Run {
            config,
            boundary,
            out_dir,
        } => {
            let cfg = load_config(config, &cli.limits)?;
            let input = BoundaryInput::from_text(&read(boundary)?)?;
            let result = run_algorithm(&cfg, &input)?;
            write_run_outputs(&result, out_dir)?;
            if verbose {
                for d in &result.diagnostics {
                    eprintln!("{d}");
                }
            }
            stdout.push_str(&certification_report(&result));
            Ok(if result.certified {
                EXIT_OK
            } else if result.resource_exhausted {
                EXIT_RESOURCE
            } else {
                EXIT_FAILED
            })
        }
        Command::Export { chain, format, out } => {
            let text = read(chain)?;
            let c = match format {
                ExportFormat::Obj => Chain::from_text_in(&text, 3)?,
                ExportFormat::Csv => Chain::from_text(&text)?,
            };
            let text = match format {
                ExportFormat::Obj => export_obj(&c)?,
                ExportFormat::Csv => export_csv(&c),
            };
            write(out, &text)?;
            let _ = writeln!(stdout, "cells={}", c.len());
            Ok(EXIT_OK)
        }
    }
}

/// Writes the chain files, the iteration log and the report of a run.
pub fn write_run_outputs(result: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(&dir.join("T_prime.chain"), &result.t_prime.to_text())?;
    write(&dir.join("witness_S.chain"), &result.witness.to_text())?;
    write(&dir.join("iterations.csv"), &iteration_csv(&result.records))?;
    write(&dir.join("report.txt"), &certification_report(result))?;
    Ok(())
}

/// Quads of a 2-chain in `R^3`. Negative coefficients reverse the winding;
/// a `# multiplicity k` comment precedes a face repeated `k` times.
pub fn export_obj(c: &Chain) -> Result<String> {
    if c.ambient() != 3 || c.dim() != 2 {
        return Err(Error::Dimension(format!(
            "obj export needs a 2-chain in R^3, got a {}-chain in R^{}",
            c.dim(),
            c.ambient()
        )));
    }
    let h = c.spacing().clone();
    let mut index: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
    let mut order: Vec<Vec<i64>> = Vec::new();
    let mut faces = String::new();
    for (key, coeff) in c.iter() {
        if !coeff.is_integer() {
            return Err(Error::Contract(format!("non-integral coefficient {} on {key}", fmt_q(coeff))));
        }
        let (a, b) = (key.axes[0] as usize, key.axes[1] as usize);
        let p0 = key.anchor.to_vec();
        let mut p1 = p0.clone();
        p1[a] += 1;
        let mut p2 = p1.clone();
        p2[b] += 1;
        let mut p3 = p0.clone();
        p3[b] += 1;
        let mut quad = [p0, p1, p2, p3];
        if coeff < &Q::from_integer(0.into()) {
            quad.reverse();
        }
        let ids: Vec<usize> = quad
            .iter()
            .map(|p| {
                *index.entry(p.clone()).or_insert_with(|| {
                    order.push(p.clone());
                    order.len()
                })
            })
            .collect();
        let mult = coeff.abs().to_integer();
        let _ = writeln!(faces, "# multiplicity {mult}");
        let mut k = num_bigint::BigInt::from(0);
        while k < mult {
            let _ = writeln!(faces, "f {} {} {} {}", ids[0], ids[1], ids[2], ids[3]);
            k += 1;
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# plateau chain h={}", fmt_q(&h));
    for p in &order {
        let xyz: Vec<String> = p.iter().map(|&v| format!("{}", to_f64(&(&h * Q::from_integer(v.into()))))).collect();
        let _ = writeln!(s, "v {}", xyz.join(" "));
    }
    s.push_str(&faces);
    Ok(s)
}

/// One row per cell: lattice anchor coordinates, axes, coefficient.
pub fn export_csv(c: &Chain) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# N={} dim={} h={}", c.ambient(), c.dim(), fmt_q(c.spacing()));
    let cols: Vec<String> = (0..c.ambient()).map(|i| format!("a{i}")).collect();
    let _ = writeln!(s, "{},axes,coeff", cols.join(","));
    for (key, coeff) in c.iter() {
        let anchor: Vec<String> = key.anchor.iter().map(|v| v.to_string()).collect();
        let axes: Vec<String> = key.axes.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{},{},{}", anchor.join(","), axes.join(" "), fmt_q(coeff));
    }
    s
}

/// Inverse of [`export_csv`].
pub fn import_csv(text: &str) -> Result<Chain> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| ParseError::new("empty csv"))?;
    let mut ambient = None;
    let mut dim = None;
    let mut h = None;
    for field in header.trim_start_matches('#').split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| ParseError::new(format!("bad csv header field {field:?}")))?;
        let int = || v.parse::<usize>().map_err(|_| ParseError::new(format!("bad {k} {v:?}")));
        match k {
            "N" => ambient = Some(int()?),
            "dim" => dim = Some(int()?),
            "h" => h = Some(parse_q(v)?),
            _ => return Err(ParseError::new(format!("unknown csv header key {k:?}")).into()),
        }
    }
    let (Some(n), Some(k), Some(h)) = (ambient, dim, h) else {
        return Err(ParseError::new("csv header needs N, dim and h").into());
    };
    lines.next().ok_or_else(|| ParseError::new("missing csv column line"))?;
    let mut terms = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n + 2 {
            return Err(ParseError::new(format!("csv row {}: expected {} fields", i + 3, n + 2)).into());
        }
        let anchor = fields[..n]
            .iter()
            .map(|f| f.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| ParseError::new(format!("csv row {}: bad anchor", i + 3)))?;
        let axes = fields[n]
            .split_whitespace()
            .map(|f| f.parse::<u8>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| ParseError::new(format!("csv row {}: bad axes", i + 3)))?;
        terms.push((CellKey::new(&anchor, &axes), parse_q(fields[n + 1].trim())?));
    }
    Chain::from_terms(n, k, h, terms)
}
