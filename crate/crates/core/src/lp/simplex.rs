//! Dense two-phase tableau simplex in exact arithmetic, with Bland's rule
//! as the anti-cycling fallback.

use num_traits::{One, Signed, Zero};

use super::{LinearProgram, LpSolution, LpStatus};
use crate::error::{Error, Result};
use crate::rational::Q;

struct Tableau {
    rows: Vec<Vec<Q>>,
    /// Reduced costs; the last entry is minus the objective value.
    cost: Vec<Q>,
    basis: Vec<usize>,
    width: usize,
    iterations: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Q {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.width).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                row[j] -= delta;
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for &j in &nz {
                let delta = &f * &pivot_row[j];
                self.cost[j] -= delta;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Runs simplex iterations over columns `< allowed`: most negative reduced
    /// cost first, Bland's rule for good after a run of degenerate pivots.
    /// Returns `Some(column)` if that column proves unboundedness.
    fn optimize(&mut self, allowed: usize, limit: usize) -> Result<Option<usize>> {
        let mut bland = false;
        let mut stalled = 0usize;
        loop {
            if self.iterations >= limit {
                return Err(Error::Resource(format!(
                    "simplex iteration limit {limit} exceeded"
                )));
            }
            let entering = if bland {
                (0..allowed).find(|&j| self.cost[j].is_negative())
            } else {
                (0..allowed)
                    .filter(|&j| self.cost[j].is_negative())
                    .min_by(|&a, &b| self.cost[a].cmp(&self.cost[b]).then(a.cmp(&b)))
            };
            let Some(c) = entering else {
                return Ok(None);
            };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                None => return Ok(Some(c)),
                Some((r, ratio)) => {
                    if ratio.is_zero() {
                        stalled += 1;
                        if stalled > 50 {
                            bland = true;
                        }
                    } else {
                        stalled = 0;
                    }
                    self.pivot(r, c)
                }
            }
        }
    }

    fn set_costs(&mut self, costs: &[Q]) {
        let mut cost = costs.to_vec();
        cost.push(Q::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[i].iter().enumerate() {
                if !v.is_zero() {
                    cost[j] -= cb * v;
                }
            }
        }
        self.cost = cost;
    }
}

pub(super) fn solve(p: &LinearProgram, limit: usize) -> Result<LpSolution> {
    let n = p.num_vars();
    let m1 = p.eq_rows.len();
    let m2 = p.le_rows.len();
    let m = m1 + m2;
    let art0 = n + m2;
    let width = art0 + m;

    let mut rows = Vec::with_capacity(m);
    let mut flip = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![Q::zero(); width + 1];
        let (src, rhs) = if i < m1 {
            (&p.eq_rows[i], &p.eq_rhs[i])
        } else {
            let k = i - m1;
            row[n + k] = Q::one();
            (&p.le_rows[k], &p.le_rhs[k])
        };
        for (j, v) in src {
            row[*j] += v;
        }
        row[width] = rhs.clone();
        let neg = rhs.is_negative();
        if neg {
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[art0 + i] = Q::one();
        rows.push(row);
        flip.push(neg);
    }
    // Inequality rows with a nonnegative right side start with their slack basic.
    let basis: Vec<usize> = (0..m)
        .map(|i| if i >= m1 && !flip[i] { n + i - m1 } else { art0 + i })
        .collect();
    let mut t = Tableau {
        rows,
        cost: Vec::new(),
        basis,
        width,
        iterations: 0,
    };

    // Phase 1.
    let mut phase1 = vec![Q::zero(); width];
    for c in phase1.iter_mut().skip(art0) {
        *c = Q::one();
    }
    t.set_costs(&phase1);
    t.optimize(art0, limit)?;
    let infeas = -t.cost[width].clone();
    let duals = |t: &Tableau, art_cost: &Q| -> (Vec<Q>, Vec<Q>) {
        let mut y = Vec::with_capacity(m1);
        let mut z = Vec::with_capacity(m2);
        for i in 0..m {
            let mut v = art_cost - &t.cost[art0 + i];
            if flip[i] {
                v = -v;
            }
            if i < m1 {
                y.push(v);
            } else {
                z.push(v);
            }
        }
        (y, z)
    };
    if infeas.is_positive() {
        let (y, z) = duals(&t, &Q::one());
        let dual_objective = p.dual_objective(&y, &z);
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![Q::zero(); n],
            objective: Q::zero(),
            eq_duals: y,
            le_duals: z,
            dual_objective,
            ray: None,
            iterations: t.iterations,
        });
    }
    // Drive zero-level artificials out of the basis where possible.
    for r in 0..m {
        if t.basis[r] >= art0 {
            if let Some(c) = (0..art0).find(|&j| !t.rows[r][j].is_zero()) {
                t.pivot(r, c);
            }
        }
    }

    // Phase 2.
    let mut phase2 = vec![Q::zero(); width];
    phase2[..n].clone_from_slice(&p.costs);
    t.set_costs(&phase2);
    let unbounded = t.optimize(art0, limit)?;

    let mut x = vec![Q::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).clone();
        }
    }
    let objective = p.objective(&x);
    if let Some(c) = unbounded {
        let mut ray = vec![Q::zero(); n];
        if c < n {
            ray[c] = Q::one();
        }
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n {
                ray[b] = -t.rows[i][c].clone();
            }
        }
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x,
            objective,
            eq_duals: vec![Q::zero(); m1],
            le_duals: vec![Q::zero(); m2],
            dual_objective: Q::zero(),
            ray: Some(ray),
            iterations: t.iterations,
        });
    }
    let (y, z) = duals(&t, &Q::zero());
    let dual_objective = p.dual_objective(&y, &z);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        eq_duals: y,
        le_duals: z,
        dual_objective,
        ray: None,
        iterations: t.iterations,
    })
}
