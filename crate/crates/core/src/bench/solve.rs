//! One solve of one measure on one instance, through the oracle, the bundled
//! branch-and-bound or an external LP solver.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{evaluate_open, ContinuousSolution, CostMatrix, DiscreteSolution, Instance, Measure};
use crate::model::{
    build_envy_continuous, build_envy_discrete, build_m1_continuous, build_m1_discrete, build_pmedian_discrete,
    build_weber_continuous, extract_facilities, extract_open, lift_continuous, lift_discrete, LocationBox, MilpModel,
};
use crate::oracle::{self, solve_continuous_grid, GridConfig, DEFAULT_TIE_LIMIT};
use crate::refsolver::{branch_and_bound, solve_external, SolveStatus, SolverConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverChoice {
    Oracle,
    Bundled,
    /// Command template with `{lp}` and `{sol}` placeholders.
    External(String),
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverChoice::Oracle => f.write_str("oracle"),
            SolverChoice::Bundled => f.write_str("bundled"),
            SolverChoice::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(SolverChoice::Oracle),
            "bundled" => Ok(SolverChoice::Bundled),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(SolverChoice::External(cmd.to_string())),
                _ => Err(Error::usage(format!(
                    "unknown solver `{s}` (expected oracle, bundled or external:<cmd>)"
                ))),
            },
        }
    }
}

/// Solver settings shared by every solve of an experiment.
#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub solver: SolverChoice,
    pub time_limit: Option<f64>,
    /// Grid spacing as a fraction of the widest box side.
    pub grid_divisions: usize,
    pub grid_rounds: usize,
    /// Scratch directory for external solver files.
    pub workdir: PathBuf,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            solver: SolverChoice::Oracle,
            time_limit: None,
            grid_divisions: 10,
            grid_rounds: 6,
            workdir: std::env::temp_dir().join("ieflp-work"),
        }
    }
}

/// How a solution was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Proven optimal (enumeration or closed tree).
    Exact,
    /// Best known: grid search, time limit or unproven external result.
    Approximate,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::Approximate => "approx",
        }
    }
}

fn discrete_model(costs: &CostMatrix, p: usize, measure: Measure) -> Result<MilpModel> {
    match measure {
        Measure::IntraEnvy => build_m1_discrete(costs, p, false),
        Measure::Median => build_pmedian_discrete(costs, p),
        Measure::Envy => build_envy_discrete(costs, p),
    }
}

fn continuous_model(instance: &Instance, p: usize, measure: Measure, bx: &LocationBox) -> Result<MilpModel> {
    match measure {
        Measure::IntraEnvy => build_m1_continuous(instance, p, bx),
        Measure::Median => build_weber_continuous(instance, p, bx),
        Measure::Envy => build_envy_continuous(instance, p, bx),
    }
}

fn run_model(model: &MilpModel, settings: &SolveSettings, warm: Option<Vec<f64>>) -> Result<(Vec<f64>, Provenance)> {
    let result = match &settings.solver {
        SolverChoice::External(cmd) => solve_external(model, cmd, &settings.workdir)?,
        _ => {
            let cfg = SolverConfig {
                time_limit: settings.time_limit,
                warm_start: warm,
                ..SolverConfig::default()
            };
            branch_and_bound(model, &cfg, None)?
        }
    };
    let x = result
        .incumbent
        .ok_or_else(|| Error::Solver(format!("no feasible point (status {})", result.status)))?;
    let prov = if result.status == SolveStatus::Optimal {
        Provenance::Exact
    } else {
        Provenance::Approximate
    };
    Ok((x, prov))
}

/// Optimal (or best found) sites for `measure`; the assignment is the best
/// closest assignment for that measure.
pub fn solve_discrete(
    costs: &CostMatrix,
    p: usize,
    measure: Measure,
    settings: &SolveSettings,
) -> Result<(DiscreteSolution, Provenance)> {
    if settings.solver == SolverChoice::Oracle {
        return Ok((oracle::solve_discrete_exact(costs, p, measure)?, Provenance::Exact));
    }
    let model = discrete_model(costs, p, measure)?;
    let warm = match settings.solver {
        SolverChoice::Bundled => {
            let start = oracle::swap_local_search(costs, p, measure, 0)?;
            Some(lift_discrete(&model, costs, &start.assignment)?)
        }
        _ => None,
    };
    let (x, prov) = run_model(&model, settings, warm)?;
    let open = extract_open(&model, &x);
    if open.len() != p {
        return Err(Error::Verification(format!("solver opened {} sites, expected {p}", open.len())));
    }
    let (assignment, objective) = evaluate_open(costs, &open, measure, DEFAULT_TIE_LIMIT)?;
    Ok((
        DiscreteSolution {
            assignment,
            objective,
            measure,
        },
        prov,
    ))
}

/// Grid step used for a box.
pub fn grid_step(bx: &LocationBox, divisions: usize) -> f64 {
    let width = bx.low.iter().zip(&bx.high).map(|(l, h)| h - l).fold(0.0, f64::max);
    if width > 0.0 {
        width / divisions.max(1) as f64
    } else {
        1.0
    }
}

pub fn solve_continuous(
    instance: &Instance,
    p: usize,
    measure: Measure,
    bx: &LocationBox,
    settings: &SolveSettings,
) -> Result<(ContinuousSolution, Provenance)> {
    let grid = GridConfig::new(grid_step(bx, settings.grid_divisions), settings.grid_rounds);
    let approx = solve_continuous_grid(instance, p, measure, bx, &grid)?.solution;
    if settings.solver == SolverChoice::Oracle {
        return Ok((approx, Provenance::Approximate));
    }
    let model = continuous_model(instance, p, measure, bx)?;
    let warm = match settings.solver {
        SolverChoice::Bundled => Some(lift_continuous(&model, instance, &approx.facilities, &approx.assignment)?),
        _ => None,
    };
    let (x, prov) = run_model(&model, settings, warm)?;
    let facilities = extract_facilities(&model, &x);
    let phi = crate::eval::facility_costs(instance, &facilities)?;
    let open: Vec<usize> = (0..p).collect();
    let (assignment, objective) = evaluate_open(&phi, &open, measure, DEFAULT_TIE_LIMIT)?;
    Ok((
        ContinuousSolution {
            facilities,
            assignment,
            objective,
            measure,
        },
        prov,
    ))
}
