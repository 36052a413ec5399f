use super::output::means_by_p;
use super::{DeviationRecord, Problem};
use crate::eval::Measure;

/// Size in percentage points of the one inversion tolerated by the trend
/// checks.
pub const TREND_SLACK: f64 = 2.0;

/// True when `values` moves in the given direction except for at most one
/// step against it, of at most `slack`.
pub fn monotone_with_slack(values: &[f64], increasing: bool, slack: f64) -> bool {
    let mut inversions = 0;
    for w in values.windows(2) {
        let against = if increasing { w[0] - w[1] } else { w[1] - w[0] };
        if against > 1e-9 {
            if against > slack {
                return false;
            }
            inversions += 1;
        }
    }
    inversions <= 1
}

/// Outcome of the property checks on a battery.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    /// Largest deviation of a solution under its own measure.
    pub max_self_deviation: f64,
    /// Mean intra-envy deviation of discrete median solutions.
    pub discrete_median_ie_mean: f64,
    /// Mean intra-envy deviation of median solutions, by increasing p.
    pub discrete_median_ie_by_p: Vec<(usize, f64)>,
    pub continuous_median_ie_by_p: Vec<(usize, f64)>,
    /// Smallest median-cost deviation of an intra-envy solution over all
    /// cells (the price of fairness).
    pub min_price_of_fairness: f64,
    pub self_zero: bool,
    pub median_ie_positive: bool,
    pub discrete_non_increasing: bool,
    pub continuous_non_decreasing: bool,
    pub fairness_nonnegative: bool,
}

impl TrendReport {
    pub fn all_pass(&self) -> bool {
        self.self_zero
            && self.median_ie_positive
            && self.discrete_non_increasing
            && self.continuous_non_decreasing
            && self.fairness_nonnegative
    }
}

fn median_ie_series(records: &[DeviationRecord], problem: Problem) -> Vec<(usize, f64)> {
    means_by_p(records)
        .into_iter()
        .filter(|((pr, native, evaluated, _), _)| {
            *pr == problem && *native == Measure::Median && *evaluated == Measure::IntraEnvy
        })
        .map(|((_, _, _, p), (_, mean))| (p, mean))
        .collect()
}

/// Runs the battery checks: self-deviations vanish, median solutions pay in
/// intra-envy, the intra-envy cost of median solutions falls with p for
/// discrete cells and rises with p for continuous ones (one inversion of at
/// most [`TREND_SLACK`] allowed), and intra-envy solutions never beat the
/// median optimum on median cost.
pub fn check_trends(records: &[DeviationRecord]) -> TrendReport {
    let max_self_deviation = records
        .iter()
        .filter(|r| r.native == r.evaluated)
        .map(|r| r.deviation)
        .fold(0.0, f64::max);
    let med_ie: Vec<f64> = records
        .iter()
        .filter(|r| r.cell.problem == Problem::Discrete && r.native == Measure::Median && r.evaluated == Measure::IntraEnvy)
        .map(|r| r.deviation)
        .collect();
    let discrete_median_ie_mean = if med_ie.is_empty() {
        0.0
    } else {
        med_ie.iter().sum::<f64>() / med_ie.len() as f64
    };
    let discrete = median_ie_series(records, Problem::Discrete);
    let continuous = median_ie_series(records, Problem::Continuous);
    let values = |s: &[(usize, f64)]| s.iter().map(|(_, v)| *v).collect::<Vec<_>>();
    let min_price_of_fairness = records
        .iter()
        .filter(|r| r.native == Measure::IntraEnvy && r.evaluated == Measure::Median)
        .map(|r| r.deviation)
        .fold(f64::INFINITY, f64::min);
    TrendReport {
        max_self_deviation,
        discrete_median_ie_mean,
        self_zero: max_self_deviation <= 1e-9,
        median_ie_positive: discrete_median_ie_mean > 0.0,
        discrete_non_increasing: !discrete.is_empty() && monotone_with_slack(&values(&discrete), false, TREND_SLACK),
        continuous_non_decreasing: !continuous.is_empty()
            && monotone_with_slack(&values(&continuous), true, TREND_SLACK),
        fairness_nonnegative: min_price_of_fairness.is_finite() && min_price_of_fairness >= 0.0,
        min_price_of_fairness,
        discrete_median_ie_by_p: discrete,
        continuous_median_ie_by_p: continuous,
    }
}
