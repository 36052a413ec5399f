//! Cross-measure deviation experiment: solve every instance of a battery
//! under the median, envy and intra-envy measures, evaluate each solution
//! under all three, and report how far it sits from the best value known
//! for the evaluated measure.

mod output;
mod solve;
mod trends;

pub use output::{emit_outputs, write_deviations_csv, write_solutions_csv, write_summary_csv, OUTPUT_FILES};
pub use solve::{grid_step, solve_continuous, solve_discrete, Provenance, SolveSettings, SolverChoice};
pub use trends::{check_trends, monotone_with_slack, TrendReport, TREND_SLACK};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::eval::{evaluate_open, facility_costs, CostMatrix, Instance, InstanceKind, Measure};
use crate::gen::{cost_matrix_from_sites, generate, GenConfig};
use crate::model::LocationBox;
use crate::oracle::{refine_facilities, DEFAULT_TIE_LIMIT};

/// Gaps below this (relative to the solution value) count as zero.
pub const DEVIATION_TOL: f64 = 1e-9;

/// Percent by which `f_solution` exceeds `f_best`, relative to
/// `f_solution`. Returns 0 when the solution value is itself (near) zero.
pub fn deviation(f_solution: f64, f_best: f64) -> Result<f64> {
    if !f_solution.is_finite() || !f_best.is_finite() {
        return Err(Error::Consistency(format!("non-finite values {f_solution} / {f_best}")));
    }
    let gap = f_solution - f_best;
    if gap < -DEVIATION_TOL * f_solution.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "solution value {f_solution} is below the reference {f_best}"
        )));
    }
    if f_solution <= 1e-12 {
        return Ok(0.0);
    }
    Ok((100.0 * gap.max(0.0) / f_solution).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Problem {
    Discrete,
    Continuous,
}

impl Problem {
    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Discrete => "discrete",
            Problem::Continuous => "continuous",
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "discrete" => Ok(Problem::Discrete),
            "continuous" => Ok(Problem::Continuous),
            other => Err(Error::usage(format!("unknown problem `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kinds: Vec<InstanceKind>,
    pub dims: Vec<usize>,
    pub ns: Vec<usize>,
    /// Facility counts; a cell only runs when `p <= 3n/4`.
    pub ps: Vec<usize>,
    /// Instances per (kind, d, n) combination.
    pub seeds: usize,
    pub base_seed: u64,
    pub measures: Vec<Measure>,
    pub problems: Vec<Problem>,
    pub settings: SolveSettings,
    /// Worker threads; 0 picks the available parallelism.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    /// The desk grid: n in {6, 9, 12}, p in {2, 3}, both kinds, d = 2.
    fn default() -> Self {
        ExperimentConfig {
            kinds: vec![InstanceKind::Random, InstanceKind::Blobs],
            dims: vec![2],
            ns: vec![6, 9, 12],
            ps: vec![2, 3],
            seeds: 5,
            base_seed: 2024,
            measures: Measure::ALL.to_vec(),
            problems: vec![Problem::Discrete, Problem::Continuous],
            settings: SolveSettings::default(),
            threads: 0,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::usage(format!("bad value `{s}` for `{key}`"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::usage(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Reads `key = value` lines over the defaults. Blank lines and text after
    /// `#` are ignored; list values are comma separated.
    pub fn from_kv(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(no + 1, format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "kinds" => cfg.kinds = parse_list(key, value)?,
                "dims" | "d" => cfg.dims = parse_list(key, value)?,
                "ns" | "n" => cfg.ns = parse_list(key, value)?,
                "ps" | "p" => cfg.ps = parse_list(key, value)?,
                "seeds" => cfg.seeds = parse_one(key, value)?,
                "base_seed" => cfg.base_seed = parse_one(key, value)?,
                "measures" => cfg.measures = parse_list(key, value)?,
                "problems" => cfg.problems = parse_list(key, value)?,
                "solver" => cfg.settings.solver = value.parse()?,
                "time_limit" => {
                    cfg.settings.time_limit = match value {
                        "none" | "" => None,
                        v => Some(parse_one(key, v)?),
                    }
                }
                "grid_divisions" => cfg.settings.grid_divisions = parse_one(key, value)?,
                "grid_rounds" => cfg.settings.grid_rounds = parse_one(key, value)?,
                "workdir" => cfg.settings.workdir = value.into(),
                "threads" => cfg.threads = parse_one(key, value)?,
                other => return Err(Error::parse(no + 1, format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("kinds", self.kinds.is_empty()),
            ("dims", self.dims.is_empty()),
            ("ns", self.ns.is_empty()),
            ("ps", self.ps.is_empty()),
            ("measures", self.measures.is_empty()),
            ("problems", self.problems.is_empty()),
        ];
        if let Some((key, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::usage(format!("`{key}` must not be empty")));
        }
        if self.seeds == 0 {
            return Err(Error::usage("seeds must be at least 1"));
        }
        if self.ps.iter().any(|&p| p < 2) {
            return Err(Error::usage("every p must be at least 2"));
        }
        if self.dims.contains(&0) || self.ns.contains(&0) {
            return Err(Error::usage("dimensions and sizes must be positive"));
        }
        if self.kinds.contains(&InstanceKind::External) {
            return Err(Error::usage("the battery generates random or blobs instances only"));
        }
        if let Some(t) = self.settings.time_limit {
            if !(t > 0.0) {
                return Err(Error::usage("time_limit must be positive"));
            }
        }
        if self.settings.grid_divisions == 0 {
            return Err(Error::usage("grid_divisions must be positive"));
        }
        Ok(())
    }

    fn sorted_measures(&self) -> Vec<Measure> {
        let mut m = self.measures.clone();
        m.sort();
        m.dedup();
        m
    }

    /// Every cell of the battery, in canonical order.
    pub fn cells(&self) -> Vec<CellKey> {
        let sorted = |v: &[usize]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        let mut problems = self.problems.clone();
        problems.sort();
        problems.dedup();
        let mut kinds = self.kinds.clone();
        kinds.sort();
        kinds.dedup();
        let mut out = Vec::new();
        for &problem in &problems {
            for &kind in &kinds {
                for &d in &sorted(&self.dims) {
                    for &n in &sorted(&self.ns) {
                        for &p in sorted(&self.ps).iter().filter(|&&p| 4 * p <= 3 * n) {
                            for seed in 0..self.seeds {
                                out.push(CellKey {
                                    problem,
                                    kind,
                                    d,
                                    n,
                                    p,
                                    seed,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Generator seed of replicate `seed` for (kind, d, n). The same instance
    /// is used for every p and both problems.
    pub fn instance_seed(&self, kind: InstanceKind, d: usize, n: usize, seed: usize) -> u64 {
        let mut h = self.base_seed;
        for v in [kind as u64, d as u64, n as u64, seed as u64] {
            h = splitmix(h ^ v);
        }
        h
    }
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One (problem, kind, d, n, p, replicate) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub problem: Problem,
    pub kind: InstanceKind,
    pub d: usize,
    pub n: usize,
    pub p: usize,
    pub seed: usize,
}

impl CellKey {
    pub fn instance_id(&self) -> String {
        format!("{}-d{}-n{}-s{}", self.kind, self.d, self.n, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationRecord {
    pub cell: CellKey,
    /// Measure whose model produced the solution.
    pub native: Measure,
    /// Measure the solution is judged by.
    pub evaluated: Measure,
    pub value: f64,
    /// Best value of `evaluated` over the cell's solutions.
    pub best: f64,
    pub deviation: f64,
}

/// Where a solution puts its facilities.
#[derive(Debug, Clone, PartialEq)]
pub enum Location {
    Sites(Vec<usize>),
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionRecord {
    pub cell: CellKey,
    pub measure: Measure,
    pub provenance: Provenance,
    pub objective: f64,
    pub location: Location,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: CellKey,
    pub message: String,
}

/// Everything a run produced, sorted canonically.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    pub records: Vec<DeviationRecord>,
    pub solutions: Vec<SolutionRecord>,
    pub failures: Vec<CellFailure>,
}

/// Solutions of one cell, one per measure, plus the cost matrix (over the
/// cell's candidate locations) used to evaluate them.
struct CellSolutions {
    solutions: Vec<SolutionRecord>,
    /// `values[s][e]`: solution `s` judged by measure `e`.
    values: Vec<Vec<f64>>,
}

fn cross_records(cell: CellKey, measures: &[Measure], sols: &CellSolutions) -> Result<Vec<DeviationRecord>> {
    let mut out = Vec::new();
    for (e, &evaluated) in measures.iter().enumerate() {
        let best = sols.values.iter().map(|v| v[e]).fold(f64::INFINITY, f64::min);
        for (s, sol) in sols.solutions.iter().enumerate() {
            let value = sols.values[s][e];
            out.push(DeviationRecord {
                cell,
                native: sol.measure,
                evaluated,
                value,
                best,
                deviation: deviation(value, best)?,
            });
        }
    }
    Ok(out)
}

fn judge(costs: &CostMatrix, open: &[usize], measures: &[Measure]) -> Result<Vec<f64>> {
    measures
        .iter()
        .map(|&e| Ok(evaluate_open(costs, open, e, DEFAULT_TIE_LIMIT)?.1))
        .collect()
}

fn discrete_cell(
    cell: CellKey,
    costs: &CostMatrix,
    measures: &[Measure],
    settings: &SolveSettings,
) -> Result<CellSolutions> {
    let mut solutions = Vec::new();
    let mut values = Vec::new();
    for &measure in measures {
        let (sol, provenance) = solve_discrete(costs, cell.p, measure, settings)?;
        let open = sol.assignment.open().to_vec();
        values.push(judge(costs, &open, measures)?);
        solutions.push(SolutionRecord {
            cell,
            measure,
            provenance,
            objective: sol.objective,
            location: Location::Sites(open),
        });
    }
    Ok(CellSolutions { solutions, values })
}

const CROSS_PASSES: usize = 5;

fn continuous_cell(
    cell: CellKey,
    instance: &Instance,
    measures: &[Measure],
    settings: &SolveSettings,
) -> Result<CellSolutions> {
    let bx = LocationBox::around(instance, 0.0)?;
    let step = grid_step(&bx, settings.grid_divisions);
    let mut found = Vec::new();
    for &measure in measures {
        found.push(solve_continuous(instance, cell.p, measure, &bx, settings)?);
    }
    // None of the continuous routes is exact, so a solution can lose to
    // another measure's solution on its own measure. Restart the refinement
    // from the other solutions until no measure improves.
    for _ in 0..CROSS_PASSES {
        let mut changed = false;
        for a in 0..measures.len() {
            for b in 0..measures.len() {
                if a == b {
                    continue;
                }
                let start = found[b].0.facilities.clone();
                let cand = refine_facilities(instance, measures[a], &bx, &start, step, settings.grid_rounds)?;
                if cand.objective < found[a].0.objective - DEVIATION_TOL * found[a].0.objective.abs().max(1.0) {
                    found[a] = (cand, Provenance::Approximate);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut solutions = Vec::new();
    let mut values = Vec::new();
    for (&measure, (sol, provenance)) in measures.iter().zip(found) {
        let phi = facility_costs(instance, &sol.facilities)?;
        let open: Vec<usize> = (0..cell.p).collect();
        values.push(judge(&phi, &open, measures)?);
        solutions.push(SolutionRecord {
            cell,
            measure,
            provenance,
            objective: sol.objective,
            location: Location::Points(sol.facilities),
        });
    }
    Ok(CellSolutions { solutions, values })
}

/// Solves one cell on a given instance and cross-evaluates the solutions.
/// Discrete cells use the demand points as candidate sites.
pub fn run_cell(
    cell: CellKey,
    instance: &Instance,
    measures: &[Measure],
    settings: &SolveSettings,
) -> Result<(Vec<DeviationRecord>, Vec<SolutionRecord>)> {
    let sols = match cell.problem {
        Problem::Discrete => {
            let costs = cost_matrix_from_sites(instance, &instance.as_sites())?;
            discrete_cell(cell, &costs, measures, settings)?
        }
        Problem::Continuous => continuous_cell(cell, instance, measures, settings)?,
    };
    let records = cross_records(cell, measures, &sols)?;
    Ok((records, sols.solutions))
}

/// Same as [`run_cell`] for a discrete cell with an explicit cost matrix.
pub fn run_discrete_cell(
    cell: CellKey,
    costs: &CostMatrix,
    measures: &[Measure],
    settings: &SolveSettings,
) -> Result<(Vec<DeviationRecord>, Vec<SolutionRecord>)> {
    let sols = discrete_cell(cell, costs, measures, settings)?;
    let records = cross_records(cell, measures, &sols)?;
    Ok((records, sols.solutions))
}

type CellOutput = Result<(Vec<DeviationRecord>, Vec<SolutionRecord>)>;

/// Runs every cell of the battery, in parallel. Failed cells are listed in
/// the result and the run carries on.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let cells = config.cells();
    let measures = config.sorted_measures();
    let mut instances: BTreeMap<(InstanceKind, usize, usize, usize), Instance> = BTreeMap::new();
    for c in &cells {
        let key = (c.kind, c.d, c.n, c.seed);
        if !instances.contains_key(&key) {
            let gen = GenConfig::new(c.kind, c.n, c.d, config.instance_seed(c.kind, c.d, c.n, c.seed));
            instances.insert(key, generate(&gen)?);
        }
    }

    let threads = match config.threads {
        0 => std::thread::available_parallelism().map_or(1, |t| t.get()),
        t => t,
    }
    .min(cells.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<CellOutput>>> = Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(k) else { break };
                let inst = &instances[&(cell.kind, cell.d, cell.n, cell.seed)];
                let out = run_cell(*cell, inst, &measures, &config.settings);
                slots.lock().expect("no worker panicked")[k] = Some(out);
            });
        }
    });

    let mut result = ExperimentResult::default();
    let slots = slots.into_inner().expect("no worker panicked");
    for (cell, slot) in cells.iter().zip(slots) {
        match slot.expect("every cell was visited") {
            Ok((records, solutions)) => {
                result.records.extend(records);
                result.solutions.extend(solutions);
            }
            Err(e) => result.failures.push(CellFailure {
                cell: *cell,
                message: e.to_string(),
            }),
        }
    }
    result.records.sort_by(|a, b| (a.cell, a.native, a.evaluated).cmp(&(b.cell, b.native, b.evaluated)));
    result.solutions.sort_by(|a, b| (a.cell, a.measure).cmp(&(b.cell, b.measure)));
    Ok(result)
}
