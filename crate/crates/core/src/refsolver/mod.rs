//! The bundled reference MILP solver and solver-file interchange.

pub mod bnb;
pub mod external;
pub mod lpfile;
pub mod lu;
pub mod simplex;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{Constraint, MilpModel};

pub use bnb::{branch_and_bound, relative_gap};
pub use external::{parse_solution_file, solve_external, write_solution_file};
pub use lpfile::{parse_lp, write_lp};
pub use simplex::{simplex_solve, Basis, DualSimplex, LpOptions, LpSolution, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Limit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => SolveStatus::Optimal,
            "feasible" => SolveStatus::Feasible,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            "limit" => SolveStatus::Limit,
            _ => return Err(Error::usage(format!("unknown solve status `{s}`"))),
        })
    }
}

/// Where separated cuts are added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CutMode {
    #[default]
    Off,
    Root,
    Tree,
}

impl CutMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CutMode::Off => "off",
            CutMode::Root => "root",
            CutMode::Tree => "tree",
        }
    }
}

impl fmt::Display for CutMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(CutMode::Off),
            "root" => Ok(CutMode::Root),
            "tree" => Ok(CutMode::Tree),
            _ => Err(Error::usage(format!("unknown cut mode `{s}` (expected off, root or tree)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BranchRule {
    /// Most fractional binary, lowest index on ties.
    #[default]
    MostFractional,
}

impl BranchRule {
    pub fn as_str(self) -> &'static str {
        "most-fractional"
    }
}

impl FromStr for BranchRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "most-fractional" => Ok(BranchRule::MostFractional),
            _ => Err(Error::usage(format!("unknown branching rule `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Seconds; `None` for no limit.
    pub time_limit: Option<f64>,
    pub gap_tol: f64,
    pub node_limit: Option<u64>,
    pub branching: BranchRule,
    pub cut_mode: CutMode,
    pub root_cut_rounds: usize,
    pub feas_tol: f64,
    pub pivot_tol: f64,
    /// Feasible point injected as the initial incumbent.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit: None,
            gap_tol: 1e-6,
            node_limit: None,
            branching: BranchRule::MostFractional,
            cut_mode: CutMode::Off,
            root_cut_rounds: 10,
            feas_tol: 1e-6,
            pivot_tol: 1e-9,
            warm_start: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if let Some(t) = self.time_limit {
            if !positive(t) {
                return Err(Error::usage(format!("time limit must be positive, got {t}")));
            }
        }
        if self.node_limit == Some(0) {
            return Err(Error::usage("node limit must be positive"));
        }
        for (name, v) in [
            ("gap tolerance", self.gap_tol),
            ("feasibility tolerance", self.feas_tol),
            ("pivot tolerance", self.pivot_tol),
        ] {
            if !positive(v) {
                return Err(Error::usage(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cut_mode != CutMode::Off && self.root_cut_rounds == 0 {
            return Err(Error::usage("root cut rounds must be positive"));
        }
        Ok(())
    }
}

/// Separation hook called with the current LP point.
pub trait CutCallback {
    /// Rows violated by `x`, over the variable indices of `model`.
    fn separate(&mut self, model: &MilpModel, x: &[f64]) -> Vec<Constraint>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Values by variable index.
    pub incumbent: Option<Vec<f64>>,
    /// `+∞` without an incumbent.
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    /// LP bound after the root cut rounds.
    pub root_bound: Option<f64>,
    pub root_gap: f64,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: f64,
    pub cuts_added: usize,
    /// Root LP bound after each cut round, starting with the plain relaxation.
    pub bound_history: Vec<f64>,
}

impl SolveResult {
    pub(crate) fn empty() -> SolveResult {
        SolveResult {
            status: SolveStatus::Limit,
            incumbent: None,
            objective: f64::INFINITY,
            best_bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            root_bound: None,
            root_gap: f64::INFINITY,
            nodes: 0,
            lp_iterations: 0,
            wall_time: 0.0,
            cuts_added: 0,
            bound_history: Vec::new(),
        }
    }

    /// Incumbent as a name → value map.
    pub fn incumbent_map(&self, model: &MilpModel) -> BTreeMap<String, f64> {
        self.incumbent
            .iter()
            .flat_map(|vals| model.variables.iter().zip(vals).map(|(v, &x)| (v.name.clone(), x)))
            .collect()
    }
}
