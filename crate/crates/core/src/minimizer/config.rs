//! Run configuration: tolerances, the ε-schedule, the neighborhood `U`, limits.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use num_traits::{One, Signed};

use crate::chain::Chain;
use crate::error::{Error, ParseError, Result};
use crate::grid::{toml_rational, CellKey, GridSpec, DEFAULT_CELL_LIMIT};
use crate::rational::{fmt_q, Q};
use crate::region::{DistanceField, Region};

/// The open neighborhood `U` of `spt B`.
#[derive(Clone, Debug, PartialEq)]
pub enum Neighborhood {
    /// `{x : dist(x, spt B) < r}`.
    Radius(Q),
    /// Union of closed `N`-cells at the given spacing.
    Cells { spacing: Q, cells: BTreeSet<CellKey> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Limits {
    pub max_level: usize,
    pub lp_iterations: usize,
    pub bnb_nodes: usize,
    pub cell_limit: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_level: 4,
            lp_iterations: 200_000,
            bnb_nodes: 10_000,
            cell_limit: DEFAULT_CELL_LIMIT,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmConfig {
    pub epsilon: Q,
    pub epsilon1: Q,
    pub ratio: Q,
    /// Density constant in the a priori bound `‖R‖[I(r)] <= kappa * r`.
    pub kappa: Q,
    pub neighborhood: Neighborhood,
    pub grid: GridSpec,
    pub limits: Limits,
}

fn get_q(table: &toml::Table, key: &str) -> Result<Option<Q>> {
    match table.get(key) {
        None => Ok(None),
        Some(v) => Ok(Some(
            toml_rational(v).map_err(|e| ParseError::new(format!("config key `{key}`: {}", e.message)))?,
        )),
    }
}

fn require_q(table: &toml::Table, key: &str) -> Result<Q> {
    get_q(table, key)?.ok_or_else(|| ParseError::new(format!("config: missing key `{key}`")).into())
}

fn get_usize(table: &toml::Table, key: &str, default: usize) -> Result<usize> {
    match table.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_integer()
            .filter(|&i| i >= 0)
            .map(|i| i as usize)
            .ok_or_else(|| ParseError::new(format!("config key `limits.{key}`: expected a nonnegative integer")).into()),
    }
}

impl AlgorithmConfig {
    /// Parses the TOML config; a `U = { cells = "<file>" }` path is resolved against `base`.
    pub fn from_text(text: &str, base: Option<&Path>) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| ParseError::new(format!("config: {e}")))?;
        let grid = match table.get("grid") {
            Some(toml::Value::Table(t)) => GridSpec::from_table(t)?,
            _ => return Err(ParseError::new("config: missing table `[grid]`").into()),
        };
        let neighborhood = match table.get("U") {
            None => return Err(ParseError::new("config: missing key `U`").into()),
            Some(toml::Value::Table(t)) => {
                let file = t
                    .get("cells")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| ParseError::new("config: `U` table needs a `cells` file"))?;
                let path = base.map(|b| b.join(file)).unwrap_or_else(|| file.into());
                let text = std::fs::read_to_string(&path)?;
                let chain = Chain::from_text(&text)?;
                if chain.dim() != chain.ambient() {
                    return Err(ParseError::new("config: `U` cell file must list N-cells").into());
                }
                Neighborhood::Cells {
                    spacing: chain.spacing().clone(),
                    cells: chain.support(),
                }
            }
            Some(v) => Neighborhood::Radius(
                toml_rational(v).map_err(|e| ParseError::new(format!("config key `U`: {}", e.message)))?,
            ),
        };
        let defaults = Limits::default();
        let limits = match table.get("limits") {
            None => defaults,
            Some(toml::Value::Table(t)) => Limits {
                max_level: get_usize(t, "max_level", defaults.max_level)?,
                lp_iterations: get_usize(t, "lp_iterations", defaults.lp_iterations)?,
                bnb_nodes: get_usize(t, "bnb_nodes", defaults.bnb_nodes)?,
                cell_limit: get_usize(t, "cell_limit", defaults.cell_limit as usize)? as u64,
            },
            Some(_) => return Err(ParseError::new("config: `limits` must be a table").into()),
        };
        Ok(Self {
            epsilon: require_q(&table, "epsilon")?,
            epsilon1: require_q(&table, "epsilon1")?,
            ratio: get_q(&table, "ratio")?.unwrap_or_else(|| Q::new(1.into(), 2.into())),
            kappa: require_q(&table, "kappa")?,
            neighborhood,
            grid,
            limits,
        })
    }

    pub fn to_text(&self) -> String {
        let u = match &self.neighborhood {
            Neighborhood::Radius(r) => format!("U = \"{}\"\n", fmt_q(r)),
            Neighborhood::Cells { .. } => "U = { cells = \"U.chain\" }\n".to_string(),
        };
        format!(
            "epsilon = \"{}\"\nepsilon1 = \"{}\"\nratio = \"{}\"\nkappa = \"{}\"\n{u}\n[grid]\n{}\n[limits]\nmax_level = {}\nlp_iterations = {}\nbnb_nodes = {}\ncell_limit = {}\n",
            fmt_q(&self.epsilon),
            fmt_q(&self.epsilon1),
            fmt_q(&self.ratio),
            fmt_q(&self.kappa),
            self.grid.to_text(),
            self.limits.max_level,
            self.limits.lp_iterations,
            self.limits.bnb_nodes,
            self.limits.cell_limit,
        )
    }

    /// Checks the scalar conditions on `ε₁` and, given `B`, that `Clos I(2ε₁) ⊂ U`.
    pub fn validate(&self, boundary: Option<&Chain>) -> Result<()> {
        if !self.epsilon.is_positive() {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !self.epsilon1.is_positive() {
            return Err(Error::Config("epsilon1 must be positive".into()));
        }
        if !self.ratio.is_positive() || self.ratio >= Q::one() {
            return Err(Error::Config("ratio must lie in (0, 1)".into()));
        }
        if self.kappa.is_negative() {
            return Err(Error::Config("kappa must be nonnegative".into()));
        }
        if self.limits.max_level == 0 {
            return Err(Error::Config("limits.max_level must be at least 1".into()));
        }
        self.grid.validate()?;
        if &self.epsilon1 * Q::from_integer(4.into()) >= self.epsilon {
            return Err(Error::Config(format!(
                "bullet 1 violated: epsilon1 = {} is not < epsilon/4 = {}",
                fmt_q(&self.epsilon1),
                fmt_q(&(&self.epsilon / Q::from_integer(4.into())))
            )));
        }
        let two_e1 = &self.epsilon1 * Q::from_integer(2.into());
        match &self.neighborhood {
            Neighborhood::Radius(r) => {
                if two_e1 >= *r {
                    return Err(Error::Config(format!(
                        "bullet 2 violated: Clos I(2 epsilon1) = Clos I({}) is not inside U = I({})",
                        fmt_q(&two_e1),
                        fmt_q(r)
                    )));
                }
            }
            Neighborhood::Cells { spacing, cells } => {
                if let Some(b) = boundary {
                    if let Some(cell) = closed_neighborhood_escape(b, &two_e1, spacing, cells) {
                        return Err(Error::Config(format!(
                            "bullet 2 violated: cell {cell} meets Clos I(2 epsilon1) but is not in U"
                        )));
                    }
                }
            }
        }
        let third = &self.epsilon / Q::from_integer(3.into());
        if &self.kappa * &self.epsilon1 >= third {
            return Err(Error::Config(format!(
                "bullet 3 violated: kappa * epsilon1 = {} is not < epsilon/3 = {}",
                fmt_q(&(&self.kappa * &self.epsilon1)),
                fmt_q(&third)
            )));
        }
        Ok(())
    }

    /// `ε_i = ε₁ · ratio^(i-1)` for `i >= 1`.
    pub fn epsilon_at(&self, level: usize) -> Q {
        assert!(level >= 1, "levels start at 1");
        &self.epsilon1 * num_traits::pow(self.ratio.clone(), level - 1)
    }

    /// Grid spec of level `i`: the initial grid refined `i - 1` times.
    pub fn grid_at(&self, level: usize) -> GridSpec {
        let mut g = self.grid.clone();
        for _ in 1..level {
            g = g.refined();
        }
        g
    }

    /// `U` as a region, given the distance field of `spt B`.
    pub fn neighborhood_region(&self, field: Arc<DistanceField>) -> Region {
        match &self.neighborhood {
            Neighborhood::Radius(r) => Region::within(field, r.clone()),
            Neighborhood::Cells { spacing, cells } => Region::Cells {
                spacing: spacing.clone(),
                cells: Arc::new(cells.clone()),
            },
        }
    }
}

/// The first `N`-cell at `spacing` that meets `Clos I(r)` but is missing from `cells`.
fn closed_neighborhood_escape(b: &Chain, r: &Q, spacing: &Q, cells: &BTreeSet<CellKey>) -> Option<CellKey> {
    let field = DistanceField::of_chain(b);
    if field.is_empty() {
        return None;
    }
    let n = b.ambient();
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for c in field.cells() {
        let (a, z) = c.lattice_box();
        for k in 0..n {
            let x0 = (Q::from_integer(a[k].into()) * b.spacing() - r) / spacing;
            let x1 = (Q::from_integer(z[k].into()) * b.spacing() + r) / spacing;
            lo[k] = lo[k].min(i64::try_from(x0.floor().to_integer()).ok()? - 1);
            hi[k] = hi[k].max(i64::try_from(x1.ceil().to_integer()).ok()? + 1);
        }
    }
    let axes: Vec<u8> = (0..n as u8).collect();
    let r2 = r * r;
    let mut idx = lo.clone();
    loop {
        let key = CellKey::new(&idx, &axes);
        if !cells.contains(&key) {
            if let Some(d) = field.min_dist_sq(&key, spacing) {
                if d <= r2 {
                    return Some(key);
                }
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return None;
            }
            idx[k] += 1;
            if idx[k] < hi[k] {
                break;
            }
            idx[k] = lo[k];
            k += 1;
        }
    }
}

/// `ε₁ > ε₂ > …`, the first `count` terms.
pub fn epsilon_schedule(cfg: &AlgorithmConfig, count: usize) -> Result<Vec<Q>> {
    cfg.validate(None)?;
    Ok((1..=count).map(|i| cfg.epsilon_at(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, ratio};

    fn config(epsilon: Q, epsilon1: Q, kappa: Q, u: Q) -> AlgorithmConfig {
        AlgorithmConfig {
            epsilon,
            epsilon1,
            ratio: ratio(1, 2),
            kappa,
            neighborhood: Neighborhood::Radius(u),
            grid: GridSpec::cube(3, 0, 4, q(1)).unwrap(),
            limits: Limits::default(),
        }
    }

    #[test]
    fn all_three_conditions_pass() {
        let cfg = config(q(1), ratio(1, 5), ratio(1, 4), ratio(1, 2));
        cfg.validate(None).unwrap();
        // 1/5 < 1/4 and kappa * eps1 = 1/20 < 1/3.
        assert!(ratio(1, 5) < ratio(1, 4));
        assert!(ratio(1, 4) * ratio(1, 5) < ratio(1, 3));
    }

    #[test]
    fn epsilon1_of_a_third_is_rejected() {
        let cfg = config(q(1), ratio(1, 3), q(0), q(10));
        let err = cfg.validate(None).unwrap_err().to_string();
        assert!(err.contains("bullet 1"), "{err}");
    }

    #[test]
    fn neighborhood_and_density_conditions() {
        let small_u = config(q(1), ratio(1, 5), q(0), ratio(2, 5));
        assert!(small_u.validate(None).unwrap_err().to_string().contains("bullet 2"));
        let dense = config(q(1), ratio(1, 5), q(2), q(1));
        assert!(dense.validate(None).unwrap_err().to_string().contains("bullet 3"));
    }

    #[test]
    fn schedule_halves() {
        let cfg = config(q(1), ratio(1, 5), ratio(1, 4), q(1));
        let eps = epsilon_schedule(&cfg, 3).unwrap();
        assert_eq!(eps, vec![ratio(1, 5), ratio(1, 10), ratio(1, 20)]);
        assert!(eps.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn text_round_trip() {
        let cfg = config(q(2), ratio(1, 4), q(2), q(1));
        let back = AlgorithmConfig::from_text(&cfg.to_text(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn explicit_cell_neighborhood() {
        let b = {
            let c = Chain::from_terms(3, 2, q(1), [(CellKey::new(&[0, 0, 0], &[0, 1]), q(1))]).unwrap();
            c.boundary().unwrap()
        };
        let mut cells = BTreeSet::new();
        for x in -3..4 {
            for y in -3..4 {
                for z in -3..3 {
                    cells.insert(CellKey::new(&[x, y, z], &[0, 1, 2]));
                }
            }
        }
        let mut cfg = config(q(8), q(1), q(0), q(1));
        cfg.neighborhood = Neighborhood::Cells { spacing: q(1), cells: cells.clone() };
        cfg.validate(Some(&b)).unwrap();
        cells.remove(&CellKey::new(&[2, 0, 0], &[0, 1, 2]));
        cfg.neighborhood = Neighborhood::Cells { spacing: q(1), cells };
        assert!(cfg.validate(Some(&b)).unwrap_err().to_string().contains("bullet 2"));
    }
}
