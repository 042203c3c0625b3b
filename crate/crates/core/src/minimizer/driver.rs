//! The level loop: primary step, trimming to `K`, auxiliary step, stopping tests.


use crate::approximate::{ingest_boundary, BoundaryInput, Ingested};
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::grid::{CellComplex, GridSpec};
use crate::rational::Q;
use crate::region::{restrict, Hausdorff, Region};

use super::auxiliary::{minimize_auxiliary, AuxiliaryMass, AuxiliaryOptions};
use super::config::AlgorithmConfig;
use super::primary::{boundary_hausdorff, grid_minimal_mass, minimize_primary, shared_field, SolveOptions};
use super::region_k::build_region_k;

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub level: usize,
    pub eps: Q,
    pub grid: GridSpec,
    pub mass_t: Q,
    /// `None` when `K` could not be verified on this grid.
    pub mass_t_outside_k: Option<Q>,
    pub mass_t_prime: Option<Q>,
    pub mass_b_i: Option<Q>,
    /// `None` when the auxiliary step was not reached.
    pub mass_q: Option<AuxiliaryMass>,
    pub c1: bool,
    pub c2: bool,
    /// Certified lower bound of the primary program.
    pub lower_bound: Q,
    pub integral: bool,
    pub rounded: bool,
    pub membership_ok: bool,
    pub lp_iterations: usize,
    pub bnb_nodes: usize,
    pub note: String,
}

/// `(C1, C2)` from the stored masses.
pub fn check_stopping(rec: &IterationRecord, epsilon: &Q) -> (bool, bool) {
    let half = epsilon / Q::from_integer(2.into());
    let c2 = rec.mass_t_outside_k.as_ref().is_some_and(|m| *m <= half);
    let c1 = match (&rec.mass_q, &rec.mass_t_prime) {
        (Some(mq), Some(mt)) => mq.at_least(&(mt + Q::from_integer(3.into()) * &rec.eps)),
        _ => false,
    };
    (c1, c2)
}

/// Exit checks of a certified run, all recomputed from the stored chains.
#[derive(Clone, Debug)]
pub struct FinalChecks {
    pub boundary_in_u: bool,
    pub hausdorff: Hausdorff,
    pub hausdorff_ok: bool,
    pub witness_mass: Q,
    pub witness_identity: bool,
    pub witness_in_u: bool,
    pub witness_ok: bool,
    pub mass_t_prime: Q,
    pub mu_grid: Q,
    pub mass_ok: bool,
    /// `2 ε_i₀ + ε/2 <= ε` together with `C1` at the terminal level.
    pub structural_bound: Q,
    pub structural_ok: bool,
}

impl FinalChecks {
    pub fn all_passed(&self) -> bool {
        self.boundary_in_u && self.hausdorff_ok && self.witness_ok && self.mass_ok && self.structural_ok
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub certified: bool,
    pub level: Option<usize>,
    pub t_prime: Chain,
    pub boundary_final: Chain,
    pub witness: Chain,
    /// `B` on the terminal grid.
    pub boundary: Chain,
    pub epsilon: Q,
    pub eps_final: Option<Q>,
    pub records: Vec<IterationRecord>,
    pub checks: Option<FinalChecks>,
    pub ingestion: Option<Ingested>,
    /// A resource limit stopped the run early.
    pub resource_exhausted: bool,
    pub diagnostics: Vec<String>,
}

fn is_resource(e: &Error) -> bool {
    matches!(e, Error::Resource(_) | Error::CellLimit { .. })
}

fn final_checks(
    cfg: &AlgorithmConfig,
    b: &Chain,
    t_prime: &Chain,
    witness: &Chain,
    spec: &GridSpec,
    eps_i: &Q,
    c1: bool,
    solve: &SolveOptions,
) -> Result<FinalChecks> {
    let u: Region = cfg.neighborhood_region(shared_field(b));
    let h = spec.spacing.clone();
    let dt = t_prime.boundary()?;
    let boundary_in_u = dt.iter().all(|(k, _)| u.contains_cell(k, &h));
    let hausdorff = boundary_hausdorff(t_prime, b)?;
    let hausdorff_ok = if dt.is_zero() && b.is_zero() { true } else { hausdorff.below(&cfg.epsilon) };
    let witness_mass = witness.mass();
    let witness_identity = witness.boundary()?.add(&dt)? == *b;
    let witness_in_u = witness.iter().all(|(k, _)| u.contains_cell(k, &h));
    let witness_ok = witness_identity && witness_in_u && witness_mass < cfg.epsilon;
    let mu_grid = grid_minimal_mass(b, spec, solve)?.lower_bound;
    let mass_t_prime = t_prime.mass();
    let mass_ok = mass_t_prime < &cfg.epsilon + &mu_grid;
    let structural_bound = Q::from_integer(2.into()) * eps_i + &cfg.epsilon / Q::from_integer(2.into());
    let structural_ok = c1 && structural_bound <= cfg.epsilon;
    Ok(FinalChecks {
        boundary_in_u,
        hausdorff,
        hausdorff_ok,
        witness_mass,
        witness_identity,
        witness_in_u,
        witness_ok,
        mass_t_prime,
        mu_grid,
        mass_ok,
        structural_bound,
        structural_ok,
    })
}

/// Runs levels `1..=max_level` until both stopping conditions hold.
pub fn run_algorithm(cfg: &AlgorithmConfig, input: &BoundaryInput) -> Result<RunResult> {
    let n = cfg.grid.dim;
    let cx1 = CellComplex::build(&cfg.grid, cfg.limits.cell_limit)?;
    let ingested = ingest_boundary(input, &cx1)?;
    drop(cx1);
    let b1 = ingested.cycle.clone();
    cfg.validate(Some(&b1))?;
    let solve = SolveOptions {
        lp_iterations: cfg.limits.lp_iterations,
        cell_limit: cfg.limits.cell_limit,
    };
    let mut result = RunResult {
        certified: false,
        level: None,
        t_prime: Chain::zero(n, n - 1, cfg.grid.spacing.clone()),
        boundary_final: Chain::zero(n, n - 2, cfg.grid.spacing.clone()),
        witness: Chain::zero(n, n - 1, cfg.grid.spacing.clone()),
        boundary: b1.clone(),
        epsilon: cfg.epsilon.clone(),
        eps_final: None,
        records: Vec::new(),
        checks: None,
        ingestion: Some(ingested),
        resource_exhausted: false,
        diagnostics: Vec::new(),
    };
    if b1.is_zero() {
        let checks = final_checks(cfg, &b1, &result.t_prime, &result.witness, &cfg.grid, &cfg.epsilon1, true, &solve)?;
        result.certified = checks.all_passed();
        result.level = Some(1);
        result.eps_final = Some(cfg.epsilon1.clone());
        result.checks = Some(checks);
        return Ok(result);
    }
    let half = &cfg.epsilon / Q::from_integer(2.into());
    let mut b = b1;
    for level in 1..=cfg.limits.max_level {
        if level > 1 {
            b = b.subdivide();
        }
        let spec = cfg.grid_at(level);
        let eps = cfg.epsilon_at(level);
        let u = cfg.neighborhood_region(shared_field(&b));
        let primary = match minimize_primary(&b, &spec, &eps, &u, &solve) {
            Ok(p) => p,
            Err(e) if is_resource(&e) => {
                result.diagnostics.push(format!("level {level}: {e}"));
                result.resource_exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut rec = IterationRecord {
            level,
            eps: eps.clone(),
            grid: spec.clone(),
            mass_t: primary.t.mass(),
            mass_t_outside_k: None,
            mass_t_prime: None,
            mass_b_i: None,
            mass_q: None,
            c1: false,
            c2: false,
            lower_bound: primary.lower_bound.clone(),
            integral: primary.integral,
            rounded: primary.rounded,
            membership_ok: primary.membership.passed(),
            lp_iterations: primary.iterations,
            bnb_nodes: 0,
            note: String::new(),
        };
        result.boundary = b.clone();
        match build_region_k(&cfg.epsilon1, &b, &spec) {
            Err(Error::RegionVerification(msg)) => {
                rec.note = msg;
            }
            Err(e) => return Err(e),
            Ok(k) => {
                let inside = restrict(&primary.t, &k.region);
                let outside = restrict(&primary.t, &k.outside());
                if inside.mass() + outside.mass() != rec.mass_t {
                    return Err(Error::Contract("mass split over K is not exact".into()));
                }
                let b_i = inside.boundary()?;
                rec.mass_t_outside_k = Some(outside.mass());
                rec.mass_t_prime = Some(inside.mass());
                rec.mass_b_i = Some(b_i.mass());
                let c2 = outside.mass() <= half;
                if !rec.membership_ok {
                    rec.note = "a posteriori membership check failed; refining".into();
                }
                if c2 && rec.membership_ok {
                    let aux = CellComplex::build(&spec, cfg.limits.cell_limit).and_then(|cx| {
                        minimize_auxiliary(
                            &inside,
                            &cx,
                            &eps,
                            &cfg.epsilon,
                            &AuxiliaryOptions {
                                node_limit: cfg.limits.bnb_nodes,
                                cap_margin: Q::from_integer(4.into()) * &eps,
                            },
                        )
                    });
                    match aux {
                        Ok(a) => {
                            rec.mass_q = Some(a.mass);
                            rec.bnb_nodes = a.nodes;
                            rec.lp_iterations += a.lp_iterations;
                        }
                        Err(e) if is_resource(&e) => {
                            result.diagnostics.push(format!("level {level}: {e}"));
                            result.resource_exhausted = true;
                            rec.note = format!("auxiliary step stopped: {e}");
                        }
                        Err(e) => return Err(e),
                    }
                }
                let (c1, c2) = check_stopping(&rec, &cfg.epsilon);
                rec.c1 = c1;
                rec.c2 = c2;
                result.t_prime = inside.clone();
                result.boundary_final = b_i;
                result.witness = primary.s.add(&outside)?;
                result.eps_final = Some(eps.clone());
                if c1 && c2 && rec.membership_ok {
                    result.records.push(rec);
                    let checks = final_checks(cfg, &b, &result.t_prime, &result.witness, &spec, &eps, c1, &solve)?;
                    result.certified = checks.all_passed();
                    if !result.certified {
                        result.diagnostics.push("exit checks failed".into());
                    }
                    result.level = Some(level);
                    result.checks = Some(checks);
                    return Ok(result);
                }
            }
        }
        result.records.push(rec);
    }
    if result.diagnostics.is_empty() {
        result.diagnostics.push(format!(
            "stopping conditions not met by level {}; result is not certified",
            cfg.limits.max_level
        ));
    }
    Ok(result)
}

impl RunResult {
    /// Total primary mass per recorded level, for inspecting the log.
    pub fn masses(&self) -> Vec<Q> {
        self.records.iter().map(|r| r.mass_t.clone()).collect()
    }

    /// Whether no level recorded a value.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.t_prime.is_zero()
    }
}

