use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use super::simplex::{Basis, DualSimplex, LpOptions, LpStatus};
use super::{CutCallback, CutMode, SolveResult, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::model::{evaluate_model_point, MilpModel};

/// Node bounds within this distance of the incumbent count as equal.
const ABS_PRUNE_TOL: f64 = 1e-9;
const TREE_CUT_ROUNDS: usize = 3;

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, u64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

struct Node {
    parent: u64,
    changes: Vec<(usize, f64, f64)>,
    basis: Rc<Basis>,
}

struct Incumbent {
    values: Vec<f64>,
    objective: f64,
}

struct Search<'a> {
    model: &'a MilpModel,
    config: &'a SolverConfig,
    lp: DualSimplex,
    root_lower: Vec<f64>,
    root_upper: Vec<f64>,
    touched: Vec<usize>,
    is_binary: Vec<bool>,
    incumbent: Option<Incumbent>,
    deadline: Option<Instant>,
    cuts_added: usize,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some(inc) => inc.objective - prune_tol(self.config.gap_tol, inc.objective),
            None => f64::INFINITY,
        }
    }

    fn apply(&mut self, changes: &[(usize, f64, f64)]) {
        for &j in &self.touched {
            self.lp.set_bounds(j, self.root_lower[j], self.root_upper[j]);
        }
        self.touched.clear();
        for &(j, lo, hi) in changes {
            self.lp.set_bounds(j, lo, hi);
            self.touched.push(j);
        }
    }

    /// Solves the current LP, retrying once from the slack basis when the
    /// warm start runs into numerical trouble.
    fn solve_lp(&mut self, cutoff: f64) -> Result<LpStatus> {
        let status = self.lp.solve(cutoff, self.deadline);
        if matches!(status, LpStatus::Numerical | LpStatus::IterationLimit) {
            self.lp.reset_basis();
            let retry = self.lp.solve(cutoff, self.deadline);
            if matches!(retry, LpStatus::Numerical | LpStatus::IterationLimit) {
                return Err(Error::Solver(format!("LP relaxation failed: {retry:?}")));
            }
            return Ok(retry);
        }
        Ok(status)
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut best_frac = self.config.feas_tol;
        for (j, &v) in x.iter().enumerate() {
            if !self.is_binary[j] {
                continue;
            }
            let frac = (v - v.round()).abs();
            if frac > best_frac {
                best_frac = frac;
                best = Some(j);
            }
        }
        best
    }

    /// Offers an LP point with integral binaries as incumbent. Binaries are
    /// rounded; if that breaks a row the continuous part is re-solved with
    /// the binaries fixed.
    fn offer(&mut self, x: &[f64]) -> Result<()> {
        let mut point = x.to_vec();
        for (j, v) in point.iter_mut().enumerate() {
            if self.is_binary[j] {
                *v = v.round();
            }
        }
        let mut chk = evaluate_model_point(self.model, &point)?;
        if !chk.feasible {
            let fixed: Vec<(usize, f64, f64)> = (0..point.len())
                .filter(|&j| self.is_binary[j])
                .map(|j| (j, point[j], point[j]))
                .collect();
            self.apply(&fixed);
            if self.solve_lp(f64::INFINITY)? != LpStatus::Optimal {
                return Ok(());
            }
            point = self.lp.values().to_vec();
            chk = evaluate_model_point(self.model, &point)?;
            if !chk.feasible {
                return Ok(());
            }
        }
        if self.incumbent.as_ref().map_or(true, |inc| chk.objective < inc.objective) {
            self.incumbent = Some(Incumbent {
                values: point,
                objective: chk.objective,
            });
        }
        Ok(())
    }

    fn cut_rounds(&mut self, callback: &mut dyn CutCallback, rounds: usize, history: &mut Vec<f64>) -> Result<LpStatus> {
        let mut status = LpStatus::Optimal;
        for _ in 0..rounds {
            let cuts = callback.separate(self.model, self.lp.values());
            if cuts.is_empty() {
                break;
            }
            self.cuts_added += cuts.len();
            self.lp.add_rows(&cuts);
            status = self.solve_lp(self.cutoff())?;
            if status != LpStatus::Optimal {
                break;
            }
            history.push(self.lp.objective());
        }
        Ok(status)
    }
}

fn prune_tol(gap_tol: f64, incumbent: f64) -> f64 {
    (gap_tol * incumbent.abs().max(1e-9)).max(ABS_PRUNE_TOL)
}

/// Relative gap with the floor used throughout the solver.
pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    if !objective.is_finite() {
        return f64::INFINITY;
    }
    ((objective - bound) / objective.abs().max(1e-9)).max(0.0)
}

/// Best-first branch-and-bound over the binaries of `model`.
///
/// Node LPs warm-start from the parent's final basis. With a callback and
/// a cut mode other than `off`, separated rows are added at the root (and
/// at every node in `tree` mode); they are kept for the rest of the search.
pub fn branch_and_bound(
    model: &MilpModel,
    config: &SolverConfig,
    mut callback: Option<&mut dyn CutCallback>,
) -> Result<SolveResult> {
    config.validate()?;
    let start = Instant::now();
    let deadline = config.time_limit.map(|t| start + Duration::from_secs_f64(t));
    let opts = LpOptions {
        pivot_tol: config.pivot_tol,
        ..LpOptions::default()
    };
    let lp = DualSimplex::new(model, opts);
    let n = model.num_vars();
    let mut is_binary = vec![false; n];
    for j in model.binaries() {
        is_binary[j] = true;
    }
    let mut search = Search {
        model,
        config,
        root_lower: (0..n).map(|j| lp.bounds(j).0).collect(),
        root_upper: (0..n).map(|j| lp.bounds(j).1).collect(),
        lp,
        touched: Vec::new(),
        is_binary,
        incumbent: None,
        deadline,
        cuts_added: 0,
    };
    if let Some(ws) = &config.warm_start {
        let chk = evaluate_model_point(model, ws)?;
        if !chk.feasible {
            return Err(Error::Verification(format!(
                "injected incumbent violates the model by {:.3e}",
                chk.max_violation
            )));
        }
        search.incumbent = Some(Incumbent {
            values: ws.clone(),
            objective: chk.objective,
        });
    }

    let mut result = SolveResult::empty();
    let finish = |search: &Search, result: &mut SolveResult, status: SolveStatus, bound: f64| {
        result.status = status;
        result.lp_iterations = search.lp.iterations();
        result.cuts_added = search.cuts_added;
        result.wall_time = start.elapsed().as_secs_f64();
        if let Some(inc) = &search.incumbent {
            result.objective = inc.objective;
            result.incumbent = Some(inc.values.clone());
            result.best_bound = bound.min(inc.objective);
        } else {
            result.best_bound = bound;
        }
        result.gap = relative_gap(result.objective, result.best_bound);
        if let Some(rb) = result.root_bound {
            result.root_gap = relative_gap(result.objective, rb);
        }
    };

    // root
    let status = search.solve_lp(f64::INFINITY)?;
    result.nodes = 1;
    match status {
        LpStatus::Infeasible => {
            finish(&search, &mut result, SolveStatus::Infeasible, f64::INFINITY);
            return Ok(result);
        }
        LpStatus::Unbounded => {
            finish(&search, &mut result, SolveStatus::Unbounded, f64::NEG_INFINITY);
            return Ok(result);
        }
        LpStatus::TimeLimit => {
            finish(&search, &mut result, SolveStatus::Limit, f64::NEG_INFINITY);
            return Ok(result);
        }
        _ => {}
    }
    result.bound_history.push(search.lp.objective());
    let cut_mode = if callback.is_some() { config.cut_mode } else { CutMode::Off };
    if cut_mode != CutMode::Off {
        let cb = callback.as_deref_mut().expect("callback present");
        let st = search.cut_rounds(cb, config.root_cut_rounds, &mut result.bound_history)?;
        if st == LpStatus::TimeLimit {
            let last = *result.bound_history.last().expect("root bound recorded");
            finish(&search, &mut result, SolveStatus::Limit, last);
            return Ok(result);
        }
        if st == LpStatus::Infeasible {
            finish(&search, &mut result, SolveStatus::Infeasible, f64::INFINITY);
            return Ok(result);
        }
    }
    result.root_bound = Some(search.lp.objective());

    let mut heap: BinaryHeap<Reverse<Key>> = BinaryHeap::new();
    let mut nodes: std::collections::HashMap<u64, Node> = std::collections::HashMap::new();
    let mut next_id: u64 = 1;
    // lowest bound among nodes discarded only because of the tolerance
    let mut pruned_min = f64::INFINITY;
    let mut basis_owner: u64 = 0;
    let mut processing: Option<(u64, Vec<(usize, f64, f64)>)> = Some((0, Vec::new()));
    let mut node_bound = search.lp.objective();

    loop {
        if let Some((id, changes)) = processing.take() {
            // the LP holds this node's optimal solution
            let obj = search.lp.objective().max(node_bound);
            let cutoff = search.cutoff();
            if obj > cutoff {
                pruned_min = pruned_min.min(obj);
            } else {
                let x = search.lp.values().to_vec();
                match search.most_fractional(&x) {
                    None => {
                        search.offer(&x)?;
                        basis_owner = u64::MAX;
                        if let Some(inc) = &search.incumbent {
                            if inc.objective > obj {
                                pruned_min = pruned_min.min(obj);
                            }
                        }
                    }
                    Some(j) => {
                        let basis = Rc::new(search.lp.basis());
                        basis_owner = id;
                        for (lo, hi) in [(0.0, 0.0), (1.0, 1.0)] {
                            let mut ch = changes.clone();
                            ch.push((j, lo, hi));
                            let cid = next_id;
                            next_id += 1;
                            nodes.insert(
                                cid,
                                Node {
                                    parent: id,
                                    changes: ch,
                                    basis: Rc::clone(&basis),
                                },
                            );
                            heap.push(Reverse(Key(obj, cid)));
                        }
                    }
                }
            }
        }

        // next node
        let Some(Reverse(Key(bound, id))) = heap.pop() else {
            let bound = pruned_min;
            let status = if search.incumbent.is_some() {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            };
            finish(&search, &mut result, status, bound);
            return Ok(result);
        };
        let node = nodes.remove(&id).expect("queued node exists");
        let cutoff = search.cutoff();
        if bound > cutoff {
            // everything left is at least as bad
            let rest = heap.iter().map(|r| r.0 .0).fold(bound, f64::min);
            pruned_min = pruned_min.min(rest);
            heap.clear();
            nodes.clear();
            continue;
        }
        let limit_hit = config.node_limit.is_some_and(|l| result.nodes >= l)
            || deadline.is_some_and(|d| Instant::now() >= d);
        if limit_hit {
            let open = heap.iter().map(|r| r.0 .0).fold(bound, f64::min);
            finish(&search, &mut result, SolveStatus::Limit, open.min(pruned_min));
            return Ok(result);
        }
        result.nodes += 1;
        if basis_owner != node.parent {
            search.lp.set_basis(&node.basis);
        }
        search.apply(&node.changes);
        basis_owner = u64::MAX;
        let status = search.solve_lp(cutoff)?;
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Cutoff => {
                pruned_min = pruned_min.min(search.lp.objective().max(bound));
                continue;
            }
            LpStatus::TimeLimit => {
                let open = heap.iter().map(|r| r.0 .0).fold(bound, f64::min);
                finish(&search, &mut result, SolveStatus::Limit, open.min(pruned_min));
                return Ok(result);
            }
            LpStatus::Unbounded => {
                finish(&search, &mut result, SolveStatus::Unbounded, f64::NEG_INFINITY);
                return Ok(result);
            }
            _ => {}
        }
        if cut_mode == CutMode::Tree {
            let cb = callback.as_deref_mut().expect("callback present");
            let mut scratch = Vec::new();
            match search.cut_rounds(cb, TREE_CUT_ROUNDS, &mut scratch)? {
                LpStatus::Infeasible => continue,
                LpStatus::Cutoff => {
                    pruned_min = pruned_min.min(search.lp.objective().max(bound));
                    continue;
                }
                LpStatus::TimeLimit => {
                    let open = heap.iter().map(|r| r.0 .0).fold(bound, f64::min);
                    finish(&search, &mut result, SolveStatus::Limit, open.min(pruned_min));
                    return Ok(result);
                }
                _ => {}
            }
        }
        node_bound = bound;
        processing = Some((id, node.changes));
    }
}
