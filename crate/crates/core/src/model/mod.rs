//! Solver-agnostic MILP representation and the formulation builders.
//!
//! Every model minimizes. Variables and constraints keep declaration order,
//! so the same inputs always give the same model and the same LP text.

mod baseline;
mod continuous;
mod discrete;
mod lift;

pub use baseline::{build_envy_continuous, build_envy_discrete, build_pmedian_discrete, build_weber_continuous};
pub use continuous::{build_m1_continuous, build_m2_continuous, build_m3_continuous};
pub use discrete::{build_f1_discrete, build_m1_discrete, build_m3_discrete, closer_sites};
pub use lift::{extract_facilities, extract_open, lift_continuous, lift_discrete};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{CostMatrix, Instance, Measure};

/// Row and bound tolerance used when checking a point against a model.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Continuous,
}

/// What a variable stands for, derived from its name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarRole {
    Open,
    Assign,
    Envy,
    Cost,
    Coord,
    AbsDev,
    AbsSign,
    Alpha,
    KsumU,
    KsumV,
    KsumT,
    Assigned,
    Other,
}

impl VarRole {
    pub fn from_name(name: &str) -> VarRole {
        match name.split('_').next().unwrap_or("") {
            "y" => VarRole::Open,
            "x" => VarRole::Assign,
            "th" => VarRole::Envy,
            "phi" => VarRole::Cost,
            "X" => VarRole::Coord,
            "w" => VarRole::AbsDev,
            "xi" => VarRole::AbsSign,
            "al" => VarRole::Alpha,
            "u" => VarRole::KsumU,
            "v" => VarRole::KsumV,
            "t" => VarRole::KsumT,
            "z" => VarRole::Assigned,
            _ => VarRole::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// `(variable index, coefficient)`, no duplicates, no zeros.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Which formulation a model was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    M1D { strengthened: bool },
    F1D,
    M3D,
    M1C,
    M2C,
    M3C,
    MedianD,
    MedianC,
    EnvyD,
    EnvyC,
    /// A model read from an LP file without a recognised header.
    Generic,
}

impl Formulation {
    pub fn tag(self) -> &'static str {
        match self {
            Formulation::M1D { strengthened: false } => "m1d",
            Formulation::M1D { strengthened: true } => "m1d-strong",
            Formulation::F1D => "f1d",
            Formulation::M3D => "m3d",
            Formulation::M1C => "m1c",
            Formulation::M2C => "m2c",
            Formulation::M3C => "m3c",
            Formulation::MedianD => "pmedian",
            Formulation::MedianC => "weber",
            Formulation::EnvyD => "envy-d",
            Formulation::EnvyC => "envy-c",
            Formulation::Generic => "generic",
        }
    }

    pub fn is_continuous(self) -> bool {
        matches!(
            self,
            Formulation::M1C | Formulation::M2C | Formulation::M3C | Formulation::MedianC | Formulation::EnvyC
        )
    }

    /// The objective family the formulation optimizes.
    pub fn measure(self) -> Measure {
        match self {
            Formulation::MedianD | Formulation::MedianC => Measure::Median,
            Formulation::EnvyD | Formulation::EnvyC => Measure::Envy,
            _ => Measure::IntraEnvy,
        }
    }

    pub const ALL: [Formulation; 11] = [
        Formulation::M1D { strengthened: false },
        Formulation::M1D { strengthened: true },
        Formulation::F1D,
        Formulation::M3D,
        Formulation::M1C,
        Formulation::M2C,
        Formulation::M3C,
        Formulation::MedianD,
        Formulation::MedianC,
        Formulation::EnvyD,
        Formulation::EnvyC,
    ];
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formulation::ALL
            .into_iter()
            .chain([Formulation::Generic])
            .find(|f| f.tag() == s)
            .ok_or_else(|| Error::usage(format!("unknown formulation `{s}`")))
    }
}

/// Axis-aligned facility domain for the continuous problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationBox {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl LocationBox {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.len() != high.len() || low.is_empty() {
            return Err(Error::usage("box bounds must have the same nonzero dimension"));
        }
        if low.iter().chain(&high).any(|v| !v.is_finite()) {
            return Err(Error::usage("box bounds must be finite"));
        }
        if low.iter().zip(&high).any(|(l, h)| l > h) {
            return Err(Error::usage("box low must not exceed high"));
        }
        Ok(LocationBox { low, high })
    }

    pub fn cube(d: usize, low: f64, high: f64) -> Result<Self> {
        LocationBox::new(vec![low; d], vec![high; d])
    }

    /// Bounding box of the points, widened by `inflation` times its width on
    /// every side.
    pub fn around(instance: &Instance, inflation: f64) -> Result<Self> {
        if !(inflation >= 0.0) {
            return Err(Error::usage("inflation must be nonnegative"));
        }
        let d = instance.dim();
        let mut low = vec![f64::INFINITY; d];
        let mut high = vec![f64::NEG_INFINITY; d];
        for p in instance.points() {
            for l in 0..d {
                low[l] = low[l].min(p[l]);
                high[l] = high[l].max(p[l]);
            }
        }
        for l in 0..d {
            let pad = inflation * (high[l] - low[l]);
            low[l] -= pad;
            high[l] += pad;
        }
        LocationBox::new(low, high)
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.low.iter().zip(&self.high)).all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn check_instance(&self, instance: &Instance) -> Result<()> {
        if instance.dim() != self.dim() {
            return Err(Error::usage(format!(
                "box dimension {} differs from instance dimension {}",
                self.dim(),
                instance.dim()
            )));
        }
        match instance.points().iter().position(|p| !self.contains(p)) {
            Some(i) => Err(Error::usage(format!("point {i} lies outside the facility box"))),
            None => Ok(()),
        }
    }

    /// Largest ℓ1 distance from `a` to any point of the box.
    pub fn max_distance(&self, a: &[f64]) -> f64 {
        (0..self.dim()).map(|l| self.max_coord_gap(a, l)).sum()
    }

    pub fn max_coord_gap(&self, a: &[f64], l: usize) -> f64 {
        (a[l] - self.low[l]).max(self.high[l] - a[l]).max(0.0)
    }
}

/// Per-family big-M constants.
#[derive(Debug, Clone, PartialEq)]
pub struct BigM {
    pub theta: f64,
    pub close: f64,
    /// One per coordinate; empty for discrete models.
    pub abs: Vec<f64>,
    pub alpha: f64,
}

/// Smallest valid constants for a discrete cost matrix.
pub fn derive_big_m_discrete(costs: &CostMatrix) -> BigM {
    let u = costs.max_entry();
    BigM {
        theta: u,
        close: u,
        abs: Vec::new(),
        alpha: costs.n() as f64 * u,
    }
}

/// Smallest valid constants for points located in `bx`.
pub fn derive_big_m_continuous(instance: &Instance, bx: &LocationBox) -> Result<BigM> {
    bx.check_instance(instance)?;
    let u = instance
        .points()
        .iter()
        .map(|a| bx.max_distance(a))
        .fold(0.0, f64::max);
    Ok(BigM {
        theta: u,
        close: u,
        abs: bx.low.iter().zip(&bx.high).map(|(l, h)| 2.0 * (h - l)).collect(),
        alpha: instance.n() as f64 * u,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub formulation: Formulation,
    pub n: usize,
    pub m: Option<usize>,
    pub bounds: Option<LocationBox>,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
    pub meta: ModelMeta,
    index: HashMap<String, usize>,
}

impl MilpModel {
    pub fn new(meta: ModelMeta) -> Self {
        MilpModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_constant: 0.0,
            meta,
            index: HashMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::usage(format!("duplicate variable `{name}`")));
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::usage(format!("variable `{name}` has empty bounds [{lower}, {upper}]")));
        }
        let idx = self.variables.len();
        self.index.insert(name.clone(), idx);
        self.variables.push(Variable {
            role: VarRole::from_name(&name),
            name,
            kind,
            lower,
            upper,
        });
        Ok(idx)
    }

    /// Adds a row; duplicate variables are merged and zero terms dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize> {
        let name = name.into();
        let terms = self.normalize_terms(terms, &name)?;
        self.constraints.push(Constraint { name, terms, sense, rhs });
        Ok(self.constraints.len() - 1)
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (usize, f64)>, constant: f64) -> Result<()> {
        self.objective = self.normalize_terms(terms, "objective")?;
        self.objective_constant = constant;
        Ok(())
    }

    fn normalize_terms(&self, terms: impl IntoIterator<Item = (usize, f64)>, what: &str) -> Result<Vec<(usize, f64)>> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        let mut pos: HashMap<usize, usize> = HashMap::new();
        for (j, a) in terms {
            if j >= self.variables.len() {
                return Err(Error::usage(format!("`{what}` references undeclared variable {j}")));
            }
            if !a.is_finite() {
                return Err(Error::usage(format!("`{what}` has a non-finite coefficient")));
            }
            match pos.get(&j) {
                Some(&k) => out[k].1 += a,
                None => {
                    pos.insert(j, out.len());
                    out.push((j, a));
                }
            }
        }
        out.retain(|&(_, a)| a != 0.0);
        Ok(out)
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn var(&self, name: &str) -> Result<usize> {
        self.var_index(name)
            .ok_or_else(|| Error::usage(format!("unknown variable `{name}`")))
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(j, c)| c * values[j]).sum::<f64>()
    }

    /// Dense value vector from a name map; every variable must be present.
    pub fn point_from_map(&self, values: &HashMap<String, f64>) -> Result<Vec<f64>> {
        self.variables
            .iter()
            .map(|v| {
                values
                    .get(&v.name)
                    .copied()
                    .ok_or_else(|| Error::usage(format!("no value for variable `{}`", v.name)))
            })
            .collect()
    }

    pub fn point_to_map(&self, values: &[f64]) -> HashMap<String, f64> {
        self.variables
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect()
    }

    /// Copy of the model with every binary relaxed to `[0, 1]`.
    pub fn relaxed(&self) -> MilpModel {
        let mut m = self.clone();
        for v in &mut m.variables {
            v.kind = VarKind::Continuous;
        }
        m
    }
}

/// Result of checking a point against a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCheck {
    pub feasible: bool,
    pub max_violation: f64,
    pub objective: f64,
}

/// Checks bounds, integrality and every row of `model` at `values`.
pub fn evaluate_model_point(model: &MilpModel, values: &[f64]) -> Result<PointCheck> {
    if values.len() != model.num_vars() {
        return Err(Error::usage(format!(
            "point has {} values for {} variables",
            values.len(),
            model.num_vars()
        )));
    }
    if let Some(j) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::usage(format!("value of `{}` is not finite", model.variables[j].name)));
    }
    let mut worst: f64 = 0.0;
    for (v, &x) in model.variables.iter().zip(values) {
        worst = worst.max(v.lower - x).max(x - v.upper);
        if v.kind == VarKind::Binary {
            worst = worst.max(x.min(1.0 - x).max(0.0));
        }
    }
    for c in &model.constraints {
        worst = worst.max(c.violation(values));
    }
    Ok(PointCheck {
        feasible: worst <= FEAS_TOL,
        max_violation: worst,
        objective: model.objective_value(values),
    })
}

/// Like [`evaluate_model_point`], keyed by variable name.
pub fn evaluate_named_point(model: &MilpModel, values: &HashMap<String, f64>) -> Result<PointCheck> {
    evaluate_model_point(model, &model.point_from_map(values)?)
}

pub(crate) fn check_p(p: usize, m: usize) -> Result<()> {
    if p == 0 || p >= m {
        return Err(Error::usage(format!("p = {p} must satisfy 1 <= p <= m - 1 = {}", m as i64 - 1)));
    }
    Ok(())
}

/// Builds formulation `f` for `instance`. Discrete formulations use the
/// demand points as candidate sites; `bx` only matters for continuous ones.
pub fn build_formulation(f: Formulation, instance: &Instance, p: usize, bx: &LocationBox) -> Result<MilpModel> {
    let costs = || crate::gen::cost_matrix_from_sites(instance, &instance.as_sites());
    match f {
        Formulation::M1D { strengthened } => build_m1_discrete(&costs()?, p, strengthened),
        Formulation::F1D => build_f1_discrete(&costs()?, p),
        Formulation::M3D => build_m3_discrete(&costs()?, p),
        Formulation::MedianD => build_pmedian_discrete(&costs()?, p),
        Formulation::EnvyD => build_envy_discrete(&costs()?, p),
        Formulation::M1C => build_m1_continuous(instance, p, bx),
        Formulation::M2C => build_m2_continuous(instance, p, bx),
        Formulation::M3C => build_m3_continuous(instance, p, bx),
        Formulation::MedianC => build_weber_continuous(instance, p, bx),
        Formulation::EnvyC => build_envy_continuous(instance, p, bx),
        Formulation::Generic => Err(Error::usage("a generic model has no builder")),
    }
}
