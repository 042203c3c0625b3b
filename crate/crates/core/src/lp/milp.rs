//! Branch-and-bound for programs with sign-selection binaries and, optionally,
//! general integer variables.
//!
//! The only integrality needed is the choice of sign of a split variable
//! `w = w⁺ - w⁻` under a reverse-convex constraint on `w⁺ + w⁻`. Each link
//! adds a binary `z` with `w⁺ <= M z`, `w⁻ <= M (1 - z)`, `z <= 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_traits::{One, Zero};

use super::{solve_lp_with, LinearProgram, LpOptions, LpStatus};
use crate::error::{Error, Result};
use crate::rational::{fmt_q, Q};

#[derive(Clone, Debug)]
pub struct SignLink {
    pub plus: usize,
    pub minus: usize,
    pub binary: usize,
    /// Proven upper bound on `plus` and `minus`.
    pub big_m: Q,
    /// Why `big_m` is valid.
    pub provenance: String,
}

#[derive(Clone, Debug)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
    /// Nonnegative variables required to be integral (branched before the binaries).
    pub integers: Vec<usize>,
    pub links: Vec<SignLink>,
    pub node_limit: usize,
}

impl MilpProblem {
    pub fn new(lp: LinearProgram) -> Self {
        Self {
            lp,
            binaries: Vec::new(),
            integers: Vec::new(),
            links: Vec::new(),
            node_limit: 10_000,
        }
    }

    /// Adds a binary variable with `x <= 1`.
    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        let z = self.lp.add_var(name, Q::zero());
        self.lp.add_le(vec![(z, Q::one())], Q::one());
        self.binaries.push(z);
        z
    }

    /// Forces at most one of `plus`, `minus` to be nonzero.
    pub fn link_signs(&mut self, plus: usize, minus: usize, big_m: Q, provenance: impl Into<String>) -> usize {
        let z = self.add_binary(format!("sign_{}", self.links.len()));
        self.lp.add_le(vec![(plus, Q::one()), (z, -big_m.clone())], Q::zero());
        self.lp.add_le(vec![(minus, Q::one()), (z, big_m.clone())], big_m.clone());
        self.links.push(SignLink {
            plus,
            minus,
            binary: z,
            big_m,
            provenance: provenance.into(),
        });
        z
    }

    #[cfg(test)]
    fn with_fixings(&self, fixed: &[(usize, bool)]) -> LinearProgram {
        let bounds: Vec<Branch> = fixed.iter().map(|&(z, v)| Branch::Fix(z, v)).collect();
        self.with_branches(&bounds)
    }

    fn with_branches(&self, branches: &[Branch]) -> LinearProgram {
        let mut lp = self.lp.clone();
        for b in branches {
            match b {
                Branch::Fix(z, v) => lp.add_eq(vec![(*z, Q::one())], if *v { Q::one() } else { Q::zero() }),
                Branch::AtMost(j, v) => lp.add_le(vec![(*j, Q::one())], v.clone()),
                Branch::AtLeast(j, v) => lp.add_ge(vec![(*j, Q::one())], v.clone()),
            }
        }
        lp
    }
}

#[derive(Clone, Debug)]
enum Branch {
    Fix(usize, bool),
    AtMost(usize, Q),
    AtLeast(usize, Q),
}

#[derive(Clone, Debug)]
pub struct MilpSolution {
    pub status: LpStatus,
    pub x: Vec<Q>,
    pub objective: Q,
    /// Certified lower bound on the optimum over all explored nodes.
    pub lower_bound: Q,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Root relaxation was already infeasible (Farkas certified).
    pub root_infeasible: bool,
}

struct Node {
    bound: Q,
    fixed: Vec<Branch>,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap on (-bound, -seq): smallest bound first, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Best-first branch-and-bound over exact LP relaxations.
pub fn solve_reverse_milp(m: &MilpProblem, budget: &Q) -> Result<MilpSolution> {
    let opts = LpOptions {
        budget: Q::zero(),
        ..Default::default()
    };
    let mut incumbent: Option<(Q, Vec<Q>)> = None;
    let mut heap = BinaryHeap::new();
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut seq = 0usize;
    let mut root_infeasible = false;
    heap.push(Node {
        bound: Q::zero(),
        fixed: Vec::new(),
        seq,
    });
    let mut first = true;
    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound >= best - budget && !first {
                // Every remaining node is at least this bad.
                heap.push(node);
                break;
            }
        }
        if nodes >= m.node_limit {
            let bound = heap
                .iter()
                .map(|n| n.bound.clone())
                .chain(std::iter::once(node.bound.clone()))
                .min()
                .unwrap_or_else(Q::zero);
            return Err(Error::Resource(format!(
                "branch-and-bound node limit {} reached; best lower bound {}, incumbent {}",
                m.node_limit,
                fmt_q(&bound),
                incumbent
                    .as_ref()
                    .map(|(v, _)| fmt_q(v))
                    .unwrap_or_else(|| "none".into())
            )));
        }
        nodes += 1;
        let lp = m.with_branches(&node.fixed);
        let sol = solve_lp_with(&lp, &opts)?;
        iterations += sol.iterations;
        let was_first = first;
        first = false;
        match sol.status {
            LpStatus::Infeasible => {
                if was_first {
                    root_infeasible = true;
                }
                continue;
            }
            LpStatus::Unbounded => {
                return Err(Error::Contract("reverse MILP relaxation is unbounded".into()));
            }
            LpStatus::Optimal => {}
        }
        let bound = sol.dual_objective.clone();
        if let Some((best, _)) = &incumbent {
            if bound >= best - budget {
                continue;
            }
        }
        // Integer branches first: forcing a unit of a general integer moves the
        // bound far more than fixing a sign.
        let split: Option<[Branch; 2]> = m
            .integers
            .iter()
            .copied()
            .find(|&j| !sol.x[j].is_integer())
            .map(|j| {
                let lo = sol.x[j].floor();
                [Branch::AtMost(j, lo.clone()), Branch::AtLeast(j, lo + Q::one())]
            })
            .or_else(|| {
                m.binaries
                    .iter()
                    .copied()
                    .find(|&z| !sol.x[z].is_integer())
                    .map(|z| [Branch::Fix(z, false), Branch::Fix(z, true)])
            });
        match split {
            None => {
                let better = incumbent
                    .as_ref()
                    .map(|(best, _)| sol.objective < *best)
                    .unwrap_or(true);
                if better {
                    incumbent = Some((sol.objective.clone(), sol.x.clone()));
                }
            }
            Some(children) => {
                for child in children {
                    let mut fixed = node.fixed.clone();
                    fixed.push(child);
                    seq += 1;
                    heap.push(Node {
                        bound: bound.clone(),
                        fixed,
                        seq,
                    });
                }
            }
        }
    }
    match incumbent {
        Some((objective, x)) => {
            let lower_bound = heap
                .iter()
                .map(|n| n.bound.clone())
                .min()
                .map(|b| if b < objective { b } else { objective.clone() })
                .unwrap_or_else(|| objective.clone());
            Ok(MilpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
                lower_bound,
                nodes,
                lp_iterations: iterations,
                root_infeasible: false,
            })
        }
        None => Ok(MilpSolution {
            status: LpStatus::Infeasible,
            x: Vec::new(),
            objective: Q::zero(),
            lower_bound: Q::zero(),
            nodes,
            lp_iterations: iterations,
            root_infeasible,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{solve_lp, LpStatus};
    use crate::rational::q;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `min y` s.t. `|x| >= 1` via one sign binary, `y >= ±x`.
    fn abs_program(x_fixed_zero: bool) -> MilpProblem {
        let mut lp = LinearProgram::new();
        let xp = lp.add_var("x+", q(0));
        let xm = lp.add_var("x-", q(0));
        let y = lp.add_var("y", q(1));
        lp.add_ge(vec![(y, q(1)), (xp, q(-1)), (xm, q(1))], q(0));
        lp.add_ge(vec![(y, q(1)), (xp, q(1)), (xm, q(-1))], q(0));
        lp.add_ge(vec![(xp, q(1)), (xm, q(1))], q(1));
        if x_fixed_zero {
            lp.add_eq(vec![(xp, q(1)), (xm, q(-1))], q(0));
        }
        let mut m = MilpProblem::new(lp);
        m.link_signs(xp, xm, q(10), "test bound");
        m
    }

    #[test]
    fn absolute_value_lower_bound() {
        let m = abs_program(false);
        let relax = solve_lp(&m.lp, &q(0)).unwrap();
        assert_eq!(relax.objective, q(0));
        let s = solve_reverse_milp(&m, &q(0)).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective, q(1));
    }

    #[test]
    fn reverse_constraint_infeasible() {
        let s = solve_reverse_milp(&abs_program(true), &q(0)).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn no_binaries_matches_lp() {
        let mut lp = LinearProgram::new();
        let a = lp.add_var("a", q(2));
        let b = lp.add_var("b", q(3));
        lp.add_ge(vec![(a, q(1)), (b, q(1))], q(4));
        let m = MilpProblem::new(lp.clone());
        let s = solve_reverse_milp(&m, &q(0)).unwrap();
        assert_eq!(s.objective, solve_lp(&lp, &q(0)).unwrap().objective);
        assert_eq!(s.nodes, 1);
    }

    #[test]
    fn node_limit_reports_resource_error() {
        let mut m = abs_program(false);
        m.node_limit = 1;
        assert!(matches!(solve_reverse_milp(&m, &q(0)), Err(Error::Resource(_))));
    }

    /// Exhaustive oracle: the best LP over all binary assignments.
    pub(crate) fn enumerate(m: &MilpProblem) -> Option<Q> {
        let k = m.binaries.len();
        let mut best: Option<Q> = None;
        for mask in 0..(1u32 << k) {
            let fixed: Vec<(usize, bool)> = m
                .binaries
                .iter()
                .enumerate()
                .map(|(i, &z)| (z, mask & (1 << i) != 0))
                .collect();
            let s = solve_lp(&m.with_fixings(&fixed), &q(0)).unwrap();
            if s.status == LpStatus::Optimal && best.as_ref().map_or(true, |b| s.objective < *b) {
                best = Some(s.objective);
            }
        }
        best
    }

    /// Random programs: `w_i = a_i - b_i` sign-split, reverse constraint
    /// `Σ (w⁺+w⁻) >= r`, linear constraints pulling `w` toward targets.
    pub(crate) fn random_program(seed: u64, k: usize) -> MilpProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut lp = LinearProgram::new();
        let mut pairs = Vec::new();
        for i in 0..k {
            let p = lp.add_var(format!("w{i}+"), q(rng.gen_range(0..3)));
            let n = lp.add_var(format!("w{i}-"), q(rng.gen_range(0..3)));
            let e = lp.add_var(format!("e{i}"), q(rng.gen_range(1..4)));
            // e_i >= |w_i - t_i|
            let t = q(rng.gen_range(-2..=2));
            lp.add_ge(vec![(e, q(1)), (p, q(-1)), (n, q(1))], -t.clone());
            lp.add_ge(vec![(e, q(1)), (p, q(1)), (n, q(-1))], t);
            lp.add_le(vec![(p, q(1)), (n, q(1))], q(3));
            pairs.push((p, n));
        }
        let r = q(rng.gen_range(1..=(2 * k as i64)));
        lp.add_ge(pairs.iter().flat_map(|&(p, n)| [(p, q(1)), (n, q(1))]).collect(), r);
        let mut m = MilpProblem::new(lp);
        for (p, n) in pairs {
            m.link_signs(p, n, q(3), "row bound w⁺ + w⁻ <= 3");
        }
        m.node_limit = 100_000;
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn branch_and_bound_matches_enumeration(seed in 0u64..1_000_000, k in 1usize..6) {
            let m = random_program(seed, k);
            let s = solve_reverse_milp(&m, &q(0)).unwrap();
            match enumerate(&m) {
                None => prop_assert_eq!(s.status, LpStatus::Infeasible),
                Some(best) => {
                    prop_assert_eq!(s.status, LpStatus::Optimal);
                    prop_assert_eq!(s.objective, best);
                }
            }
        }
    }
}
