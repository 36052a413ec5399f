use super::{Assignment, EnvyReport, Measure};
use crate::error::{Error, Result};

/// Intra-envy report for per-point costs `costs` under `assignment`.
///
/// Panics if `costs` and the assignment disagree on `n`.
pub fn intra_envy(costs: &[f64], assignment: &Assignment) -> EnvyReport {
    let n = costs.len();
    assert_eq!(n, assignment.n(), "cost vector and assignment length differ");
    let assign = assignment.assign();
    let mut ie = vec![vec![0.0; n]; n];
    let mut total = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            if assign[i] != assign[k] {
                continue;
            }
            let diff = costs[i] - costs[k];
            if diff > 0.0 {
                ie[i][k] = diff;
            } else if diff < 0.0 {
                ie[k][i] = -diff;
            }
            total += diff.abs();
        }
    }
    let cluster_sizes = assignment
        .open()
        .iter()
        .zip(assignment.clusters())
        .map(|(&j, members)| (j, members.len()))
        .collect();
    EnvyReport {
        ie_matrix: ie,
        total_intra_envy: total,
        total_global_envy: global_envy(costs),
        total_median: median_objective(costs),
        cluster_sizes,
    }
}

/// Sum of `|c_i - c_k|` over all pairs `i < k`.
pub fn global_envy(costs: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, a) in costs.iter().enumerate() {
        for b in &costs[i + 1..] {
            total += (a - b).abs();
        }
    }
    total
}

pub fn median_objective(costs: &[f64]) -> f64 {
    costs.iter().sum()
}

/// Value of `measure` for an assignment whose per-point costs are `costs`.
pub fn measure_value(measure: Measure, costs: &[f64], assignment: &Assignment) -> f64 {
    match measure {
        Measure::Median => median_objective(costs),
        Measure::Envy => global_envy(costs),
        Measure::IntraEnvy => intra_envy_total(costs, assignment),
    }
}

fn intra_envy_total(costs: &[f64], assignment: &Assignment) -> f64 {
    let assign = assignment.assign();
    let mut total = 0.0;
    for i in 0..costs.len() {
        for k in i + 1..costs.len() {
            if assign[i] == assign[k] {
                total += (costs[i] - costs[k]).abs();
            }
        }
    }
    total
}

/// Cluster intra-envy from non-increasing member costs as the weighted sum
/// `Σ_k (k_j − 2k + 1) c_(k)`.
pub fn cluster_ie_lemma1(sorted_costs: &[f64]) -> Result<f64> {
    if sorted_costs.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::usage("costs must be sorted non-increasing"));
    }
    let kj = sorted_costs.len() as f64;
    Ok(sorted_costs
        .iter()
        .enumerate()
        .map(|(k, &c)| (kj - 2.0 * (k as f64 + 1.0) + 1.0) * c)
        .sum())
}

/// Cluster intra-envy as a weighted sum of k-sums.
///
/// `costs` has length `n` and holds zeros for points outside the cluster;
/// `k_j` is the number of members.
pub fn cluster_ie_lemma2(costs: &[f64], k_j: usize) -> Result<f64> {
    let n = costs.len();
    let nonzero = costs.iter().filter(|&&c| c != 0.0).count();
    if k_j > n || nonzero > k_j {
        return Err(Error::usage(format!(
            "member count {k_j} is inconsistent with {nonzero} nonzero costs out of {n}"
        )));
    }
    let mut sorted = costs.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut sum_sk = 0.0;
    for c in &sorted {
        prefix += c;
        sum_sk += prefix;
    }
    let total: f64 = sorted.iter().sum();
    Ok(2.0 * sum_sk - (2 * n + 1 - k_j) as f64 * total)
}

/// Sum of the `k` largest entries of `values`.
pub fn ksum(values: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > values.len() {
        return Err(Error::usage(format!(
            "k = {k} out of range 1..={}",
            values.len()
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(sorted[..k].iter().sum())
}
