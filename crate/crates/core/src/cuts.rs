//! Pairwise envy inequalities in the space of the opening variables.
//!
//! For a pair of points `(i, k)` and a set `J` of sites, every integer
//! opening vector with its closest assignment satisfies
//!
//! ```text
//! θ_ik ≥ Σ_{j∈J} |φ_ij − φ_kj| · (y_j − Σ_{ℓ closer than j for i or k} y_ℓ)
//! ```
//!
//! Separation only looks at the set `J_ik` of sites whose own opening
//! value beats the opening mass strictly closer to `i` or to `k`; for that
//! set the right-hand side is the largest over all `J`.

use crate::error::{Error, Result};
use crate::eval::CostMatrix;
use crate::model::closer_sites;
use crate::model::{Constraint, Formulation, MilpModel, Sense};
use crate::refsolver::{CutCallback, DualSimplex, LpOptions, LpStatus};

/// Minimum violation for a cut to be reported.
pub const SEPARATION_TOL: f64 = 1e-6;
/// Margin by which a site's opening value must exceed the closer mass.
pub const MEMBERSHIP_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    /// Point pair, `i < k`.
    pub pair: (usize, usize),
    /// The site set `J`, ascending.
    pub sites: Vec<usize>,
    /// Right-hand side as `(site, coefficient)` on the opening variables,
    /// merged and ascending by site.
    pub coefficients: Vec<(usize, f64)>,
    /// `rhs(ȳ) − θ̄_ik` at the separated point.
    pub violation: f64,
}

impl Cut {
    /// Right-hand side evaluated at an opening vector.
    pub fn rhs(&self, y: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, c)| c * y[j]).sum()
    }

    /// The cut as a model row `θ_ik − Σ c_j y_j ≥ 0`.
    pub fn to_constraint(&self, vars: &EnvyVars, name: impl Into<String>) -> Constraint {
        let (i, k) = self.pair;
        let mut terms = vec![(vars.theta[i][k], 1.0)];
        terms.extend(self.coefficients.iter().map(|&(j, c)| (vars.open[j], -c)));
        Constraint {
            name: name.into(),
            terms,
            sense: Sense::Ge,
            rhs: 0.0,
        }
    }
}

/// Precomputed closer-site lists for every pair and site.
#[derive(Debug, Clone)]
pub struct Separator {
    n: usize,
    m: usize,
    /// `|φ_ij − φ_kj|` per pair (row-major over `i < k`) and site.
    weight: Vec<Vec<f64>>,
    closer: Vec<Vec<Vec<usize>>>,
    pub tol: f64,
}

fn pair_index(n: usize, i: usize, k: usize) -> usize {
    i * n - i * (i + 1) / 2 + (k - i - 1)
}

impl Separator {
    pub fn new(costs: &CostMatrix) -> Separator {
        let (n, m) = (costs.n(), costs.m());
        let mut weight = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        let mut closer = Vec::with_capacity(weight.capacity());
        for i in 0..n {
            for k in i + 1..n {
                weight.push((0..m).map(|j| (costs.get(i, j) - costs.get(k, j)).abs()).collect());
                closer.push((0..m).map(|j| closer_sites(costs, i, k, j)).collect());
            }
        }
        Separator {
            n,
            m,
            weight,
            closer,
            tol: SEPARATION_TOL,
        }
    }

    /// The `J_ik` cut for one pair, whether violated or not. `None` when
    /// `J_ik` is empty.
    pub fn pair_cut(&self, i: usize, k: usize, y: &[f64], theta: f64) -> Option<Cut> {
        let (i, k) = if i < k { (i, k) } else { (k, i) };
        let q = pair_index(self.n, i, k);
        let mut sites = Vec::new();
        let mut coef = vec![0.0; self.m];
        let mut rhs = 0.0;
        for j in 0..self.m {
            let closer = &self.closer[q][j];
            let slack = y[j] - closer.iter().map(|&l| y[l]).sum::<f64>();
            if slack <= MEMBERSHIP_MARGIN {
                continue;
            }
            sites.push(j);
            let w = self.weight[q][j];
            rhs += w * slack;
            coef[j] += w;
            for &l in closer {
                coef[l] -= w;
            }
        }
        if sites.is_empty() {
            return None;
        }
        Some(Cut {
            pair: (i, k),
            sites,
            coefficients: coef.into_iter().enumerate().filter(|&(_, c)| c != 0.0).collect(),
            violation: rhs - theta,
        })
    }

    /// Every violated `J_ik` cut at `(ȳ, θ̄)`, by decreasing violation then
    /// pair. `theta[i][k]` is read for `i < k` only.
    pub fn separate(&self, y: &[f64], theta: &[Vec<f64>]) -> Result<Vec<Cut>> {
        if y.len() != self.m {
            return Err(Error::usage(format!("{} opening values for {} sites", y.len(), self.m)));
        }
        if theta.len() != self.n || theta.iter().any(|r| r.len() != self.n) {
            return Err(Error::usage(format!("envy values must be {0}x{0}", self.n)));
        }
        let mut cuts: Vec<Cut> = (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |k| (i, k)))
            .filter_map(|(i, k)| self.pair_cut(i, k, y, theta[i][k]))
            .filter(|c| c.violation > self.tol)
            .collect();
        cuts.sort_by(|a, b| b.violation.total_cmp(&a.violation).then(a.pair.cmp(&b.pair)));
        Ok(cuts)
    }
}

/// Violated cuts at `(ȳ, θ̄)` with tolerance `eps`.
pub fn separate(costs: &CostMatrix, y: &[f64], theta: &[Vec<f64>], eps: f64) -> Result<Vec<Cut>> {
    let mut sep = Separator::new(costs);
    sep.tol = eps;
    sep.separate(y, theta)
}

/// Column indices of the opening and envy variables of a location-only
/// model.
#[derive(Debug, Clone)]
pub struct EnvyVars {
    pub open: Vec<usize>,
    /// `theta[i][k]` for `i < k`.
    pub theta: Vec<Vec<usize>>,
}

impl EnvyVars {
    pub fn from_model(model: &MilpModel) -> Result<EnvyVars> {
        if model.meta.formulation != Formulation::F1D {
            return Err(Error::usage(format!(
                "cuts apply to {} models, not {}",
                Formulation::F1D,
                model.meta.formulation
            )));
        }
        let n = model.meta.n;
        let m = model.meta.m.unwrap_or(0);
        let open = (0..m).map(|j| model.var(&format!("y_{j}"))).collect::<Result<Vec<_>>>()?;
        let mut theta = vec![vec![usize::MAX; n]; n];
        for i in 0..n {
            for k in i + 1..n {
                theta[i][k] = model.var(&format!("th_{i}_{k}"))?;
            }
        }
        Ok(EnvyVars { open, theta })
    }

    fn read(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let y = self.open.iter().map(|&c| x[c]).collect();
        let theta = self
            .theta
            .iter()
            .map(|row| row.iter().map(|&c| if c == usize::MAX { 0.0 } else { x[c] }).collect())
            .collect();
        (y, theta)
    }
}

/// Lazy-cut callback for the location-only model: at most `5n` of the most
/// violated cuts per call.
#[derive(Debug, Clone)]
pub struct EnvyCutCallback {
    separator: Separator,
    vars: EnvyVars,
    pub max_per_round: usize,
    emitted: usize,
}

impl EnvyCutCallback {
    pub fn new(model: &MilpModel, costs: &CostMatrix) -> Result<Self> {
        let vars = EnvyVars::from_model(model)?;
        if vars.open.len() != costs.m() || model.meta.n != costs.n() {
            return Err(Error::usage("cost matrix does not match the model"));
        }
        Ok(EnvyCutCallback {
            separator: Separator::new(costs),
            vars,
            max_per_round: 5 * costs.n(),
            emitted: 0,
        })
    }

    /// Cuts at an LP point of the model, already capped.
    pub fn cuts_at(&self, x: &[f64]) -> Vec<Cut> {
        let (y, theta) = self.vars.read(x);
        let mut cuts = self.separator.separate(&y, &theta).unwrap_or_default();
        cuts.truncate(self.max_per_round);
        cuts
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }
}

impl CutCallback for EnvyCutCallback {
    fn separate(&mut self, _model: &MilpModel, x: &[f64]) -> Vec<Constraint> {
        self.cuts_at(x)
            .into_iter()
            .map(|cut| {
                self.emitted += 1;
                let (i, k) = cut.pair;
                cut.to_constraint(&self.vars, format!("cut_{i}_{k}_{}", self.emitted))
            })
            .collect()
    }
}

/// The cut callback registered for a formulation, if any.
pub fn callback_for(model: &MilpModel, costs: &CostMatrix) -> Result<Option<EnvyCutCallback>> {
    match model.meta.formulation {
        Formulation::F1D => EnvyCutCallback::new(model, costs).map(Some),
        _ => Ok(None),
    }
}

/// Root cutting-plane loop on the LP relaxation.
///
/// Returns the model with every added cut appended and the LP bound after
/// the initial solve and after each round.
pub fn cutting_plane_loop(
    model: &MilpModel,
    costs: &CostMatrix,
    max_rounds: usize,
    opts: LpOptions,
) -> Result<(MilpModel, Vec<f64>)> {
    let mut callback = EnvyCutCallback::new(model, costs)?;
    let mut out = model.clone();
    let mut lp = DualSimplex::new(model, opts);
    let mut history = Vec::new();
    if max_rounds == 0 {
        return Ok((out, history));
    }
    let solve = |lp: &mut DualSimplex| -> Result<f64> {
        match lp.solve(f64::INFINITY, None) {
            LpStatus::Optimal => Ok(lp.objective()),
            other => Err(Error::Solver(format!("cut loop relaxation ended {other:?}"))),
        }
    };
    history.push(solve(&mut lp)?);
    for _ in 0..max_rounds {
        let rows = callback.separate(model, lp.values());
        if rows.is_empty() {
            break;
        }
        lp.add_rows(&rows);
        for row in &rows {
            out.add_constraint(row.name.clone(), row.terms.iter().copied(), row.sense, row.rhs)?;
        }
        history.push(solve(&mut lp)?);
    }
    Ok((out, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{evaluate_open, Measure};
    use crate::model::{build_f1_discrete, lift_discrete};

    fn example1() -> CostMatrix {
        let pts: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 10.0, 14.0];
        CostMatrix::from_fn(6, 6, |i, j| (pts[i] - pts[j]).abs()).unwrap()
    }

    #[test]
    fn fractional_thirds_are_cut() {
        let c = example1();
        let mut y = vec![0.0; 6];
        for j in [1, 3, 4] {
            y[j] = 1.0 / 3.0;
        }
        let theta = vec![vec![0.0; 6]; 6];
        let cuts = separate(&c, &y, &theta, SEPARATION_TOL).unwrap();
        assert!(!cuts.is_empty());
        // points 1 and 2 both see site 2 with nothing open closer
        let c01 = cuts.iter().find(|c| c.pair == (0, 1)).unwrap();
        assert!(c01.sites.contains(&1));
        assert!((c01.violation - c01.rhs(&y)).abs() < 1e-12);
        for w in cuts.windows(2) {
            assert!(w[0].violation >= w[1].violation);
        }
    }

    #[test]
    fn single_open_site() {
        let c = example1();
        let mut y = vec![0.0; 6];
        y[3] = 1.0;
        let mut theta = vec![vec![0.0; 6]; 6];
        let w = (c.get(0, 3) - c.get(2, 3)).abs();
        theta[0][2] = w - 0.5;
        let cuts = separate(&c, &y, &theta, SEPARATION_TOL).unwrap();
        let cut = cuts.iter().find(|c| c.pair == (0, 2)).unwrap();
        assert_eq!(cut.sites, vec![3]);
        assert!((cut.violation - 0.5).abs() < 1e-12);
        theta[0][2] = w;
        let cuts = separate(&c, &y, &theta, SEPARATION_TOL).unwrap();
        assert!(cuts.iter().all(|c| c.pair != (0, 2)));
    }

    #[test]
    fn lifted_optimum_is_not_cut() {
        let c = example1();
        let model = build_f1_discrete(&c, 2).unwrap();
        let cb = EnvyCutCallback::new(&model, &c).unwrap();
        for open in [[1, 4], [3, 4], [1, 5]] {
            let (a, _) = evaluate_open(&c, &open, Measure::IntraEnvy, 12).unwrap();
            let x = lift_discrete(&model, &c, &a).unwrap();
            assert!(cb.cuts_at(&x).is_empty(), "{open:?}");
        }
    }

    #[test]
    fn bad_shapes_are_rejected() {
        let c = example1();
        assert!(separate(&c, &[0.0; 5], &vec![vec![0.0; 6]; 6], 1e-6).is_err());
        assert!(separate(&c, &[0.0; 6], &vec![vec![0.0; 5]; 6], 1e-6).is_err());
    }

    #[test]
    fn loop_history_is_monotone() {
        let c = example1();
        let model = build_f1_discrete(&c, 2).unwrap();
        let (same, hist) = cutting_plane_loop(&model, &c, 0, LpOptions::default()).unwrap();
        assert_eq!(same, model);
        assert!(hist.is_empty());
        let (strong, hist) = cutting_plane_loop(&model, &c, 10, LpOptions::default()).unwrap();
        assert!(!hist.is_empty());
        for w in hist.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        assert_eq!(strong.num_rows() > model.num_rows(), hist.len() > 1);
        assert!(*hist.last().unwrap() <= 13.0 + 1e-6);
        // the lifted optimum of the location-only model survives every cut
        let (a, _) = evaluate_open(&c, &[3, 4], Measure::IntraEnvy, 12).unwrap();
        let x = lift_discrete(&model, &c, &a).unwrap();
        for row in &strong.constraints {
            assert!(row.violation(&x) <= 1e-9, "{}", row.name);
        }
    }

    #[test]
    fn other_formulations_have_no_callback() {
        let c = example1();
        let m1 = crate::model::build_m1_discrete(&c, 2, false).unwrap();
        assert!(callback_for(&m1, &c).unwrap().is_none());
        assert!(EnvyCutCallback::new(&m1, &c).is_err());
        let f1 = build_f1_discrete(&c, 2).unwrap();
        assert!(callback_for(&f1, &c).unwrap().is_some());
    }
}
