//! Domain types and objective evaluation.
//!
//! Everything here is a pure function over immutable inputs. Costs are
//! allocation costs `φ_ij` of demand point `i` at facility (or site) `j`.

mod assign;
mod envy;

pub use assign::{closest_assignments, evaluate_open, l1_distance, TIE_TOLERANCE};
pub use envy::{
    cluster_ie_lemma1, cluster_ie_lemma2, global_envy, intra_envy, ksum, measure_value,
    median_objective,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default cap on the number of tied points whose alternatives are enumerated.
pub const DEFAULT_TIE_LIMIT: usize = 12;

/// How an instance was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InstanceKind {
    Random,
    Blobs,
    External,
}

impl InstanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::Random => "random",
            InstanceKind::Blobs => "blobs",
            InstanceKind::External => "external",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(InstanceKind::Random),
            "blobs" | "blob" => Ok(InstanceKind::Blobs),
            "external" => Ok(InstanceKind::External),
            other => Err(Error::usage(format!("unknown instance kind `{other}`"))),
        }
    }
}

/// A set of demand points in `d`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    points: Vec<Vec<f64>>,
    dim: usize,
    kind: InstanceKind,
    seed: Option<u64>,
}

impl Instance {
    pub fn new(points: Vec<Vec<f64>>, kind: InstanceKind, seed: Option<u64>) -> Result<Self> {
        let dim = check_points(&points, "instance")?;
        Ok(Instance {
            points,
            dim,
            kind,
            seed,
        })
    }

    /// Convenience constructor for hand-written instances.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        Instance::new(points, InstanceKind::External, None)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// The demand points reused as candidate sites.
    pub fn as_sites(&self) -> SiteSet {
        SiteSet {
            sites: self.points.clone(),
            dim: self.dim,
        }
    }
}

/// Candidate facility positions for the discrete problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteSet {
    sites: Vec<Vec<f64>>,
    dim: usize,
}

impl SiteSet {
    pub fn new(sites: Vec<Vec<f64>>) -> Result<Self> {
        let dim = check_points(&sites, "site set")?;
        Ok(SiteSet { sites, dim })
    }

    pub fn m(&self) -> usize {
        self.sites.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }
}

fn check_points(points: &[Vec<f64>], what: &str) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::usage(format!("{what} must contain at least one point")))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::usage(format!("{what} dimension must be at least 1")));
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::usage(format!(
                "{what}: point {i} has dimension {} (expected {dim})",
                p.len()
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::usage(format!("{what}: point {i} has a non-finite coordinate")));
        }
    }
    Ok(dim)
}

/// Dense `n × m` matrix of nonnegative allocation costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::usage("cost matrix must be at least 1x1"));
        }
        let mut data = Vec::with_capacity(n * m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::usage(format!("cost matrix row {i} has {} entries", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::usage(format!("cost[{i}][{j}] = {v} is not a finite nonnegative value")));
                }
            }
            data.extend_from_slice(row);
        }
        Ok(CostMatrix { n, m, data })
    }

    pub fn from_fn(n: usize, m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let rows = (0..n).map(|i| (0..m).map(|j| f(i, j)).collect()).collect();
        CostMatrix::new(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Allocation of every demand point to an open facility.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    assign: Vec<usize>,
    open: Vec<usize>,
}

impl Assignment {
    /// `open` is sorted and deduplicated; every `assign[i]` must be open.
    pub fn new(assign: Vec<usize>, mut open: Vec<usize>) -> Result<Self> {
        open.sort_unstable();
        open.dedup();
        if open.is_empty() {
            return Err(Error::usage("an assignment needs at least one open facility"));
        }
        if let Some((i, j)) = assign
            .iter()
            .enumerate()
            .find(|(_, j)| open.binary_search(j).is_err())
        {
            return Err(Error::usage(format!("point {i} is assigned to closed facility {j}")));
        }
        Ok(Assignment { assign, open })
    }

    pub fn assign(&self) -> &[usize] {
        &self.assign
    }

    pub fn open(&self) -> &[usize] {
        &self.open
    }

    pub fn n(&self) -> usize {
        self.assign.len()
    }

    /// Allocation cost of each point under `costs`.
    pub fn costs(&self, costs: &CostMatrix) -> Vec<f64> {
        self.assign
            .iter()
            .enumerate()
            .map(|(i, &j)| costs.get(i, j))
            .collect()
    }

    /// Member indices of each open facility, in `open` order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.open.len()];
        for (i, j) in self.assign.iter().enumerate() {
            let pos = self.open.binary_search(j).expect("assignment invariant");
            out[pos].push(i);
        }
        out
    }

    /// Whether every point sits at a minimum-cost open facility.
    pub fn is_closest(&self, costs: &CostMatrix) -> bool {
        self.assign.iter().enumerate().all(|(i, &j)| {
            let best = self
                .open
                .iter()
                .map(|&l| costs.get(i, l))
                .fold(f64::INFINITY, f64::min);
            costs.get(i, j) <= best + TIE_TOLERANCE
        })
    }
}

/// Objective family used to judge a set of facilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    IntraEnvy,
    Envy,
    Median,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Median, Measure::Envy, Measure::IntraEnvy];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::IntraEnvy => "intraenvy",
            Measure::Envy => "envy",
            Measure::Median => "median",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intraenvy" | "intra-envy" | "ie" => Ok(Measure::IntraEnvy),
            "envy" => Ok(Measure::Envy),
            "median" => Ok(Measure::Median),
            other => Err(Error::usage(format!("unknown measure `{other}`"))),
        }
    }
}

/// Directional intra-envy matrix plus the three objective totals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvyReport {
    /// `ie_matrix[i][k] > 0` iff `i` and `k` share a facility and `i` pays more.
    pub ie_matrix: Vec<Vec<f64>>,
    pub total_intra_envy: f64,
    pub total_global_envy: f64,
    pub total_median: f64,
    /// `(facility, member count)` for every open facility.
    pub cluster_sizes: Vec<(usize, usize)>,
}

impl EnvyReport {
    /// Renders the matrix with one row per line, entries separated by spaces.
    pub fn matrix_text(&self) -> String {
        let mut out = String::new();
        for row in &self.ie_matrix {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution {
    pub assignment: Assignment,
    pub objective: f64,
    pub measure: Measure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSolution {
    pub facilities: Vec<Vec<f64>>,
    pub assignment: Assignment,
    pub objective: f64,
    pub measure: Measure,
}

impl ContinuousSolution {
    /// Costs of every point to every located facility.
    pub fn cost_matrix(&self, instance: &Instance) -> Result<CostMatrix> {
        facility_costs(instance, &self.facilities)
    }
}

/// `n × p` ℓ1 cost matrix between demand points and facility positions.
pub fn facility_costs(instance: &Instance, facilities: &[Vec<f64>]) -> Result<CostMatrix> {
    let mut rows = Vec::with_capacity(instance.n());
    for a in instance.points() {
        let row = facilities
            .iter()
            .map(|x| l1_distance(a, x))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    CostMatrix::new(rows)
}
