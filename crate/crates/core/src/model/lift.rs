//! Mapping solutions into model variables and back.

use super::discrete::closer_sites;
use super::{Formulation, MilpModel, VarRole};
use crate::error::{Error, Result};
use crate::eval::{facility_costs, Assignment, CostMatrix, Instance};

fn indices(name: &str) -> Result<Vec<usize>> {
    name.split('_')
        .skip(1)
        .map(|s| s.parse::<usize>().map_err(|_| Error::usage(format!("malformed variable name `{name}`"))))
        .collect()
}

/// Per-site vector of costs of the members, zero for everyone else.
fn cluster_columns(phi: &CostMatrix, assignment: &Assignment) -> Vec<Vec<f64>> {
    let mut cols = vec![vec![0.0; phi.n()]; phi.m()];
    for (i, &j) in assignment.assign().iter().enumerate() {
        cols[j][i] = phi.get(i, j);
    }
    cols
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    s
}

struct LiftData<'a> {
    formulation: Formulation,
    phi: &'a CostMatrix,
    assignment: &'a Assignment,
    cols: Vec<Vec<f64>>,
    sorted: Vec<Vec<f64>>,
    sizes: Vec<usize>,
    facilities: Option<&'a [Vec<f64>]>,
    instance: Option<&'a Instance>,
}

impl LiftData<'_> {
    fn value(&self, name: &str, role: VarRole) -> Result<f64> {
        let ix = indices(name)?;
        let assign = self.assignment.assign();
        let served = |i: usize, j: usize| if assign[i] == j { 1.0 } else { 0.0 };
        let cost = |i: usize| self.phi.get(i, assign[i]);
        let get = |k: usize| {
            ix.get(k)
                .copied()
                .ok_or_else(|| Error::usage(format!("malformed variable name `{name}`")))
        };
        Ok(match role {
            VarRole::Open => {
                if self.assignment.open().binary_search(&get(0)?).is_ok() {
                    1.0
                } else {
                    0.0
                }
            }
            VarRole::Assign => served(get(0)?, get(1)?),
            VarRole::Assigned => cost(get(0)?),
            VarRole::Envy => {
                let (i, k) = (get(0)?, get(1)?);
                match self.formulation {
                    Formulation::EnvyD | Formulation::EnvyC => (cost(i) - cost(k)).abs(),
                    Formulation::F1D => self.f1_theta(i, k),
                    _ if assign[i] == assign[k] => (cost(i) - cost(k)).abs(),
                    _ => 0.0,
                }
            }
            VarRole::Cost => {
                let (i, j) = (get(0)?, get(1)?);
                if self.formulation == Formulation::M1C {
                    self.phi.get(i, j)
                } else {
                    self.cols[j][i]
                }
            }
            VarRole::Alpha => {
                let (i, j) = (get(0)?, get(1)?);
                if self.formulation.is_continuous() {
                    served(i, j) * self.cols[j].iter().sum::<f64>()
                } else {
                    served(i, j) * self.sizes[j] as f64
                }
            }
            VarRole::KsumU => self.sorted[get(2)?][get(0)?],
            VarRole::KsumT => self.sorted[get(1)?][get(0)?],
            VarRole::KsumV => {
                let (k, i, j) = (get(0)?, get(1)?, get(2)?);
                (self.cols[j][i] - self.sorted[j][k]).max(0.0)
            }
            VarRole::Coord => self.facility(get(0)?)?[get(1)?],
            VarRole::AbsDev | VarRole::AbsSign => {
                let (i, j, l) = (get(0)?, get(1)?, get(2)?);
                let a = self.instance.ok_or_else(|| Error::usage("continuous lift needs the instance"))?.point(i)[l];
                let x = self.facility(j)?[l];
                if role == VarRole::AbsDev {
                    (a - x).abs()
                } else if a >= x {
                    1.0
                } else {
                    0.0
                }
            }
            VarRole::Other => return Err(Error::usage(format!("cannot lift variable `{name}`"))),
        })
    }

    fn facility(&self, j: usize) -> Result<&[f64]> {
        self.facilities
            .and_then(|f| f.get(j))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::usage(format!("no coordinates for facility {j}")))
    }

    /// Smallest `θ_ik` satisfying every location-only envy row.
    fn f1_theta(&self, i: usize, k: usize) -> f64 {
        let open = |j: usize| if self.assignment.open().binary_search(&j).is_ok() { 1.0 } else { 0.0 };
        (0..self.phi.m())
            .map(|j| {
                let c = (self.phi.get(i, j) - self.phi.get(k, j)).abs();
                let closer: f64 = closer_sites(self.phi, i, k, j).into_iter().map(open).sum();
                c * (open(j) - closer)
            })
            .fold(0.0, f64::max)
    }
}

fn lift(model: &MilpModel, data: &LiftData) -> Result<Vec<f64>> {
    model
        .variables
        .iter()
        .map(|v| data.value(&v.name, v.role))
        .collect()
}

fn build_data<'a>(
    formulation: Formulation,
    phi: &'a CostMatrix,
    assignment: &'a Assignment,
    facilities: Option<&'a [Vec<f64>]>,
    instance: Option<&'a Instance>,
) -> LiftData<'a> {
    let cols = cluster_columns(phi, assignment);
    let sorted = cols.iter().map(|c| sorted_desc(c)).collect();
    let mut sizes = vec![0; phi.m()];
    for &j in assignment.assign() {
        sizes[j] += 1;
    }
    LiftData {
        formulation,
        phi,
        assignment,
        cols,
        sorted,
        sizes,
        facilities,
        instance,
    }
}

/// Values of every variable of a discrete model for a closest assignment.
pub fn lift_discrete(model: &MilpModel, costs: &CostMatrix, assignment: &Assignment) -> Result<Vec<f64>> {
    if model.meta.formulation.is_continuous() {
        return Err(Error::usage("lift_discrete needs a discrete model"));
    }
    if assignment.n() != costs.n() {
        return Err(Error::usage("assignment and cost matrix disagree on n"));
    }
    lift(model, &build_data(model.meta.formulation, costs, assignment, None, None))
}

/// Values of every variable of a continuous model for located facilities
/// and an assignment onto them (facility `j` is index `j`).
pub fn lift_continuous(
    model: &MilpModel,
    instance: &Instance,
    facilities: &[Vec<f64>],
    assignment: &Assignment,
) -> Result<Vec<f64>> {
    if !model.meta.formulation.is_continuous() {
        return Err(Error::usage("lift_continuous needs a continuous model"));
    }
    if facilities.len() != model.meta.p {
        return Err(Error::usage(format!(
            "model has {} facilities, {} given",
            model.meta.p,
            facilities.len()
        )));
    }
    let phi = facility_costs(instance, facilities)?;
    lift(
        model,
        &build_data(model.meta.formulation, &phi, assignment, Some(facilities), Some(instance)),
    )
}

/// Sites with `y_j > 0.5`.
pub fn extract_open(model: &MilpModel, values: &[f64]) -> Vec<usize> {
    model
        .variables
        .iter()
        .zip(values)
        .filter(|(v, &x)| v.role == VarRole::Open && x > 0.5)
        .filter_map(|(v, _)| indices(&v.name).ok().and_then(|ix| ix.first().copied()))
        .collect()
}

/// Facility coordinates read from the `X_j_l` variables.
pub fn extract_facilities(model: &MilpModel, values: &[f64]) -> Vec<Vec<f64>> {
    let d = model.meta.bounds.as_ref().map_or(0, |b| b.dim());
    let mut out = vec![vec![0.0; d]; model.meta.p];
    for (v, &x) in model.variables.iter().zip(values) {
        if v.role == VarRole::Coord {
            if let Ok(ix) = indices(&v.name) {
                if let [j, l] = ix[..] {
                    if j < out.len() && l < d {
                        out[j][l] = x;
                    }
                }
            }
        }
    }
    out
}
