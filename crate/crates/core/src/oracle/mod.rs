//! Reference solvers that do not go through a MILP: exhaustive subset
//! enumeration, a grid search for the continuous problem and a 1-swap
//! local search.

mod grid;

pub use grid::{refine_facilities, solve_continuous_grid, GridConfig, GridResult, GridStatus};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{evaluate_open, measure_value, CostMatrix, DiscreteSolution, Measure};

/// Default limit on subset (or grid tuple) evaluations.
pub const DEFAULT_CAP: u128 = 10_000_000;
/// Default number of tied points whose alternatives are enumerated.
pub const DEFAULT_TIE_LIMIT: usize = 12;

const OBJ_TOL: f64 = 1e-9;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `k`-subsets of `0..n` in colexicographic order.
#[derive(Debug, Clone)]
pub struct Colex {
    n: usize,
    cur: Option<Vec<usize>>,
}

impl Colex {
    pub fn new(n: usize, k: usize) -> Colex {
        Colex {
            n,
            cur: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Colex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.cur.clone()?;
        let c = self.cur.as_mut().expect("checked above");
        let k = c.len();
        let mut i = 0;
        while i < k && c[i] + 1 == if i + 1 < k { c[i + 1] } else { self.n } {
            i += 1;
        }
        if i == k {
            self.cur = None;
        } else {
            c[i] += 1;
            for (t, v) in c.iter_mut().enumerate().take(i) {
                *v = t;
            }
        }
        Some(out)
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= OBJ_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Ranking of candidate subsets.
///
/// The intra-envy measure ranks by value, then by the lexicographically
/// smallest subset. The baselines rank by their own value, then prefer the
/// larger intra-envy, then the smaller subset.
#[derive(Debug, Clone)]
struct Candidate {
    open: Vec<usize>,
    value: f64,
    secondary: f64,
}

fn better(measure: Measure, a: &Candidate, b: &Candidate) -> bool {
    if !same(a.value, b.value) {
        return a.value < b.value;
    }
    if measure != Measure::IntraEnvy && !same(a.secondary, b.secondary) {
        return a.secondary > b.secondary;
    }
    a.open < b.open
}

/// Globally optimal `p` sites under `measure` by enumerating every subset.
pub fn solve_discrete_exact(costs: &CostMatrix, p: usize, measure: Measure) -> Result<DiscreteSolution> {
    solve_discrete_exact_with(costs, p, measure, DEFAULT_CAP, DEFAULT_TIE_LIMIT)
}

pub fn solve_discrete_exact_with(
    costs: &CostMatrix,
    p: usize,
    measure: Measure,
    cap: u128,
    tie_limit: usize,
) -> Result<DiscreteSolution> {
    let m = costs.m();
    if p == 0 || p > m {
        return Err(Error::usage(format!("p = {p} is outside 1..={m}")));
    }
    let needed = binomial(m, p);
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    let mut best: Option<(Candidate, crate::eval::Assignment)> = None;
    for open in Colex::new(m, p) {
        let (assignment, value) = evaluate_open(costs, &open, measure, tie_limit)?;
        let secondary = if measure == Measure::IntraEnvy {
            0.0
        } else {
            evaluate_open(costs, &open, Measure::IntraEnvy, tie_limit)?.1
        };
        let cand = Candidate { open, value, secondary };
        if best.as_ref().map_or(true, |(b, _)| better(measure, &cand, b)) {
            best = Some((cand, assignment));
        }
    }
    let (cand, assignment) = best.expect("at least one subset");
    Ok(DiscreteSolution {
        assignment,
        objective: cand.value,
        measure,
    })
}

/// 1-swap local search from the greedy median solution. The seed fixes the
/// order in which swaps are tried.
pub fn swap_local_search(costs: &CostMatrix, p: usize, measure: Measure, seed: u64) -> Result<DiscreteSolution> {
    let start = greedy_median(costs, p)?;
    swap_local_search_from(costs, &start, measure, seed)
}

/// Adds one site at a time, each time the one lowering the median cost
/// most (lowest index on ties).
pub fn greedy_median(costs: &CostMatrix, p: usize) -> Result<Vec<usize>> {
    let (n, m) = (costs.n(), costs.m());
    if p == 0 || p > m {
        return Err(Error::usage(format!("p = {p} is outside 1..={m}")));
    }
    let mut open = Vec::with_capacity(p);
    let mut best_cost = vec![f64::INFINITY; n];
    for _ in 0..p {
        let mut pick: Option<(usize, f64)> = None;
        for j in (0..m).filter(|j| !open.contains(j)) {
            let total: f64 = (0..n).map(|i| best_cost[i].min(costs.get(i, j))).sum();
            if pick.map_or(true, |(_, t)| total < t) {
                pick = Some((j, total));
            }
        }
        let (j, _) = pick.expect("p <= m leaves a closed site");
        open.push(j);
        for (i, c) in best_cost.iter_mut().enumerate() {
            *c = c.min(costs.get(i, j));
        }
    }
    open.sort_unstable();
    Ok(open)
}

/// First-improvement 1-swap descent from `start` until no exchange of an
/// open and a closed site lowers the measure.
pub fn swap_local_search_from(
    costs: &CostMatrix,
    start: &[usize],
    measure: Measure,
    seed: u64,
) -> Result<DiscreteSolution> {
    let m = costs.m();
    let mut open = start.to_vec();
    open.sort_unstable();
    open.dedup();
    if open.len() != start.len() || open.is_empty() || open.iter().any(|&j| j >= m) {
        return Err(Error::usage("start must be distinct in-range sites"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut assignment, mut value) = evaluate_open(costs, &open, measure, DEFAULT_TIE_LIMIT)?;
    loop {
        let closed: Vec<usize> = (0..m).filter(|j| !open.contains(j)).collect();
        let mut moves: Vec<(usize, usize)> = (0..open.len())
            .flat_map(|a| closed.iter().map(move |&b| (a, b)))
            .collect();
        moves.shuffle(&mut rng);
        let mut improved = false;
        for (slot, site) in moves {
            let mut trial = open.clone();
            trial[slot] = site;
            trial.sort_unstable();
            let (a, v) = evaluate_open(costs, &trial, measure, DEFAULT_TIE_LIMIT)?;
            if v < value - OBJ_TOL * value.abs().max(1.0) {
                open = trial;
                assignment = a;
                value = v;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }
    debug_assert!((measure_value(measure, &assignment.costs(costs), &assignment) - value).abs() < 1e-9);
    Ok(DiscreteSolution {
        assignment,
        objective: value,
        measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> CostMatrix {
        let pts: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 10.0, 14.0];
        CostMatrix::from_fn(6, 6, |i, j| (pts[i] - pts[j]).abs()).unwrap()
    }

    #[test]
    fn colex_order_and_count() {
        let all: Vec<Vec<usize>> = Colex::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 3], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Colex::new(7, 3).count() as u128, binomial(7, 3));
        assert_eq!(Colex::new(3, 0).count(), 1);
        assert_eq!(Colex::new(2, 3).count(), 0);
        assert_eq!(binomial(30, 15), 155_117_520);
        assert_eq!(binomial(3, 5), 0);
    }

    #[test]
    fn example1_optima() {
        let c = example1();
        let ie = solve_discrete_exact(&c, 2, Measure::IntraEnvy).unwrap();
        assert_eq!(ie.objective, 12.0);
        assert_eq!(ie.assignment.open(), &[1, 4]);
        // point 6 goes to site 10 in the optimal tie resolution
        assert_eq!(ie.assignment.assign(), &[1, 1, 1, 4, 4, 4]);
        let med = solve_discrete_exact(&c, 2, Measure::Median).unwrap();
        assert_eq!(med.objective, 11.0);
        assert_eq!(med.assignment.open(), &[1, 5]);
        let env = solve_discrete_exact(&c, 2, Measure::Envy).unwrap();
        assert_eq!(env.assignment.open(), &[2, 4]);
    }

    #[test]
    fn cap_is_enforced() {
        let c = example1();
        assert!(matches!(
            solve_discrete_exact_with(&c, 3, Measure::IntraEnvy, 19, 12),
            Err(Error::CapExceeded { needed: 20, cap: 19 })
        ));
        assert!(solve_discrete_exact(&c, 0, Measure::Median).is_err());
        assert!(solve_discrete_exact(&c, 7, Measure::Median).is_err());
    }

    #[test]
    fn duplicated_site_with_p_m_minus_one() {
        let pts: [f64; 5] = [0.0, 3.0, 3.0, 7.0, 12.0];
        let c = CostMatrix::from_fn(5, 5, |i, j| (pts[i] - pts[j]).abs()).unwrap();
        let sol = solve_discrete_exact(&c, 4, Measure::IntraEnvy).unwrap();
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn swap_search_examples() {
        let c = example1();
        let sol = swap_local_search(&c, 2, Measure::IntraEnvy, 7).unwrap();
        assert!(sol.objective <= 17.0);
        let again = swap_local_search(&c, 2, Measure::IntraEnvy, 7).unwrap();
        assert_eq!(sol, again);
        let fixed = swap_local_search_from(&c, &[1, 4], Measure::IntraEnvy, 3).unwrap();
        assert_eq!(fixed.assignment.open(), &[1, 4]);
        assert_eq!(fixed.objective, 12.0);
        assert!(swap_local_search_from(&c, &[1, 1], Measure::Median, 0).is_err());
    }

    #[test]
    fn greedy_median_on_example1() {
        assert_eq!(greedy_median(&example1(), 2).unwrap(), vec![2, 4]);
    }
}
