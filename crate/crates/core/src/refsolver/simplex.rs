//! Bounded dual simplex on `A x − s = 0` with box bounds on structurals
//! and slacks.
//!
//! The basis inverse is an LU factor followed by a product-form eta file,
//! refactored every `refactor_every` pivots. Infinite bounds are replaced by
//! ±[`ARTIFICIAL_BOUND`] so that every nonbasic variable can sit at a
//! finite bound and dual feasibility can always be restored by flipping.

use std::time::Instant;

use super::lu::LuFactor;
use crate::model::{Constraint, MilpModel, Sense};

/// Stand-in for an infinite bound.
pub const ARTIFICIAL_BOUND: f64 = 1e9;
const NONBASIC: usize = usize::MAX;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERACY_THRESHOLD: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The objective provably exceeds the cutoff.
    Cutoff,
    TimeLimit,
    IterationLimit,
    Numerical,
}

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub refactor_every: usize,
    pub max_iterations: Option<u64>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_every: 64,
            max_iterations: None,
        }
    }
}

/// Basis snapshot: basic variables by position and the bound side of
/// every variable that existed when it was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

struct Eta {
    r: usize,
    piv: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

pub struct DualSimplex {
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    lower_inf: Vec<bool>,
    upper_inf: Vec<bool>,
    basic: Vec<usize>,
    pos: Vec<usize>,
    at_upper: Vec<bool>,
    x: Vec<f64>,
    d: Vec<f64>,
    weights: Vec<f64>,
    lu: Option<LuFactor>,
    etas: Vec<Eta>,
    primal_dirty: bool,
    work: Vec<f64>,
    iterations: u64,
    objective_constant: f64,
    opts: LpOptions,
}

fn clamp_bound(v: f64, lower: bool) -> (f64, bool) {
    if v.is_finite() && v.abs() < ARTIFICIAL_BOUND {
        (v, false)
    } else if lower {
        (-ARTIFICIAL_BOUND, v == f64::NEG_INFINITY || v <= -ARTIFICIAL_BOUND)
    } else {
        (ARTIFICIAL_BOUND, v == f64::INFINITY || v >= ARTIFICIAL_BOUND)
    }
}

fn slack_bounds(sense: Sense, rhs: f64) -> (f64, f64) {
    match sense {
        Sense::Le => (f64::NEG_INFINITY, rhs),
        Sense::Ge => (rhs, f64::INFINITY),
        Sense::Eq => (rhs, rhs),
    }
}

impl DualSimplex {
    /// LP relaxation of `model` with the slack basis.
    pub fn new(model: &MilpModel, opts: LpOptions) -> DualSimplex {
        let n = model.num_vars();
        let mut lp = DualSimplex {
            n,
            m: 0,
            cols: vec![Vec::new(); n],
            cost: vec![0.0; n],
            lower: Vec::with_capacity(n),
            upper: Vec::with_capacity(n),
            lower_inf: Vec::with_capacity(n),
            upper_inf: Vec::with_capacity(n),
            basic: Vec::new(),
            pos: vec![NONBASIC; n],
            at_upper: vec![false; n],
            x: vec![0.0; n],
            d: vec![0.0; n],
            weights: Vec::new(),
            lu: None,
            etas: Vec::new(),
            primal_dirty: true,
            work: Vec::new(),
            iterations: 0,
            objective_constant: model.objective_constant,
            opts,
        };
        for v in &model.variables {
            let (lo, li) = clamp_bound(v.lower, true);
            let (hi, hi_inf) = clamp_bound(v.upper, false);
            lp.lower.push(lo);
            lp.upper.push(hi);
            lp.lower_inf.push(li);
            lp.upper_inf.push(hi_inf);
        }
        for &(j, c) in &model.objective {
            lp.cost[j] += c;
        }
        for j in 0..n {
            lp.at_upper[j] = lp.cost[j] < 0.0;
            lp.d[j] = lp.cost[j];
        }
        lp.add_rows(&model.constraints);
        lp
    }

    pub fn num_structurals(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    /// Appends rows; their slacks enter the basis.
    pub fn add_rows(&mut self, rows: &[Constraint]) {
        for row in rows {
            let r = self.m;
            for &(j, v) in &row.terms {
                self.cols[j].push((r, v));
            }
            let (lo, hi) = slack_bounds(row.sense, row.rhs);
            let (lo, li) = clamp_bound(lo, true);
            let (hi, hi_inf) = clamp_bound(hi, false);
            self.lower.push(lo);
            self.upper.push(hi);
            self.lower_inf.push(li);
            self.upper_inf.push(hi_inf);
            self.cost.push(0.0);
            self.x.push(0.0);
            self.d.push(0.0);
            self.at_upper.push(false);
            self.pos.push(r);
            self.basic.push(self.n + r);
            self.weights.push(1.0);
            self.m += 1;
        }
        if !rows.is_empty() {
            self.lu = None;
            self.etas.clear();
            self.primal_dirty = true;
        }
    }

    /// Sets the bounds of structural `j`.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(j < self.n, "structural index out of range");
        let (lo, li) = clamp_bound(lo, true);
        let (hi, hi_inf) = clamp_bound(hi, false);
        if self.lower[j] == lo && self.upper[j] == hi {
            return;
        }
        self.lower[j] = lo;
        self.upper[j] = hi;
        self.lower_inf[j] = li;
        self.upper_inf[j] = hi_inf;
        if self.pos[j] == NONBASIC {
            self.primal_dirty = true;
        }
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    pub fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.clone(),
            at_upper: self.at_upper.clone(),
        }
    }

    /// Restores a snapshot. Rows added after it was taken keep their
    /// slacks basic.
    pub fn set_basis(&mut self, b: &Basis) {
        let m0 = b.basic.len();
        assert!(m0 <= self.m && b.at_upper.len() == self.n + m0, "basis does not fit this LP");
        self.pos.iter_mut().for_each(|p| *p = NONBASIC);
        self.basic.clear();
        self.basic.extend_from_slice(&b.basic);
        self.basic.extend((m0..self.m).map(|r| self.n + r));
        for (p, &v) in self.basic.iter().enumerate() {
            self.pos[v] = p;
        }
        self.at_upper[..b.at_upper.len()].copy_from_slice(&b.at_upper);
        for v in b.at_upper.len()..self.at_upper.len() {
            self.at_upper[v] = false;
        }
        self.weights.iter_mut().for_each(|w| *w = 1.0);
        self.lu = None;
        self.etas.clear();
        self.primal_dirty = true;
    }

    /// Returns to the slack basis.
    pub fn reset_basis(&mut self) {
        let b = Basis {
            basic: (0..self.m).map(|r| self.n + r).collect(),
            at_upper: (0..self.n + self.m).map(|j| j < self.n && self.cost[j] < 0.0).collect(),
        };
        self.set_basis(&b);
    }

    /// Structural values.
    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        self.objective_constant + self.cost[..self.n].iter().zip(&self.x).map(|(c, x)| c * x).sum::<f64>()
    }

    /// Lagrangian bound from the current reduced costs over the true
    /// (possibly infinite) bounds.
    pub fn dual_bound(&self) -> f64 {
        let mut g = self.objective_constant;
        for j in 0..self.n + self.m {
            let dj = self.d[j];
            if dj.abs() <= self.opts.dual_tol {
                continue;
            }
            if dj > 0.0 {
                if self.lower_inf[j] {
                    return f64::NEG_INFINITY;
                }
                g += dj * self.lower[j];
            } else {
                if self.upper_inf[j] {
                    return f64::NEG_INFINITY;
                }
                g += dj * self.upper[j];
            }
        }
        g
    }

    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(r, v) in &self.cols[j] {
                f(r, v);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }

    fn refactor(&mut self) -> bool {
        for _attempt in 0..4 {
            let columns: Vec<Vec<(usize, f64)>> = self
                .basic
                .iter()
                .map(|&j| {
                    let mut c = Vec::new();
                    self.for_column(j, |r, v| c.push((r, v)));
                    c
                })
                .collect();
            match LuFactor::factor(self.m, &columns) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    self.etas.clear();
                    self.work.resize(self.m, 0.0);
                    return true;
                }
                Err(sing) => {
                    // swap the dependent columns for slacks of the uncovered rows
                    for (&p, &r) in sing.columns.iter().zip(&sing.rows) {
                        let old = self.basic[p];
                        self.pos[old] = NONBASIC;
                        self.at_upper[old] = self.x[old] > 0.5 * (self.lower[old] + self.upper[old]);
                        let slack = self.n + r;
                        if self.pos[slack] != NONBASIC {
                            continue;
                        }
                        self.basic[p] = slack;
                        self.pos[slack] = p;
                        self.weights[p] = 1.0;
                    }
                    self.primal_dirty = true;
                }
            }
        }
        false
    }

    fn ftran(&mut self, b: &mut [f64]) {
        let lu = self.lu.as_ref().expect("factor present");
        lu.solve(b, &mut self.work);
        for e in &self.etas {
            let yr = b[e.r] / e.piv;
            b[e.r] = yr;
            if yr != 0.0 {
                for (&i, &v) in e.idx.iter().zip(&e.val) {
                    b[i] -= v * yr;
                }
            }
        }
    }

    fn btran(&mut self, c: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut acc = c[e.r];
            for (&i, &v) in e.idx.iter().zip(&e.val) {
                acc -= v * c[i];
            }
            c[e.r] = acc / e.piv;
        }
        let lu = self.lu.as_ref().expect("factor present");
        lu.solve_transpose(c, &mut self.work);
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.upper[j]
        } else {
            self.lower[j]
        }
    }

    fn compute_primal(&mut self) {
        let mut b = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v != 0.0 {
                self.for_column(j, |r, a| b[r] -= a * v);
            }
        }
        self.ftran(&mut b);
        for p in 0..self.m {
            self.x[self.basic[p]] = b[p];
        }
        self.primal_dirty = false;
    }

    /// Recomputes reduced costs; returns whether a bound flip was needed
    /// to keep them dual feasible.
    fn compute_duals(&mut self) -> bool {
        let mut y: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
        self.btran(&mut y);
        let mut flipped = false;
        for j in 0..self.n + self.m {
            if self.pos[j] != NONBASIC {
                self.d[j] = 0.0;
                continue;
            }
            let dj = if j < self.n {
                self.cost[j] - self.cols[j].iter().map(|&(r, v)| v * y[r]).sum::<f64>()
            } else {
                y[j - self.n]
            };
            self.d[j] = dj;
            if self.lower[j] == self.upper[j] {
                continue;
            }
            if !self.at_upper[j] && dj < -self.opts.dual_tol {
                self.at_upper[j] = true;
                flipped = true;
            } else if self.at_upper[j] && dj > self.opts.dual_tol {
                self.at_upper[j] = false;
                flipped = true;
            }
        }
        flipped
    }

    fn reset_state(&mut self) -> bool {
        if !self.refactor() {
            return false;
        }
        self.compute_primal();
        if self.compute_duals() {
            self.compute_primal();
        }
        true
    }

    fn choose_leaving(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.primal_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for p in 0..self.m {
            let j = self.basic[p];
            let xj = self.x[j];
            let delta = if xj < self.lower[j] - tol * (1.0 + self.lower[j].abs()) {
                xj - self.lower[j]
            } else if xj > self.upper[j] + tol * (1.0 + self.upper[j].abs()) {
                xj - self.upper[j]
            } else {
                continue;
            };
            if bland {
                if best.map_or(true, |(bp, _)| j < self.basic[bp]) {
                    best = Some((p, delta));
                }
                continue;
            }
            let score = delta * delta / self.weights[p];
            if score > best_score {
                best_score = score;
                best = Some((p, delta));
            }
        }
        best
    }

    fn at_artificial(&self) -> bool {
        (0..self.n + self.m).any(|j| {
            (self.lower_inf[j] && self.x[j] <= -0.5 * ARTIFICIAL_BOUND)
                || (self.upper_inf[j] && self.x[j] >= 0.5 * ARTIFICIAL_BOUND)
        })
    }

    /// Largest violation of `A x = s` recomputed from the structurals
    /// against the true slack bounds.
    pub fn max_row_violation(&self) -> f64 {
        let mut act = vec![0.0; self.m];
        for j in 0..self.n {
            for &(r, v) in &self.cols[j] {
                act[r] += v * self.x[j];
            }
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.m {
            let s = self.n + r;
            let lo = if self.lower_inf[s] { f64::NEG_INFINITY } else { self.lower[s] };
            let hi = if self.upper_inf[s] { f64::INFINITY } else { self.upper[s] };
            worst = worst.max(lo - act[r]).max(act[r] - hi);
        }
        for j in 0..self.n {
            worst = worst.max(self.lower[j] - self.x[j]).max(self.x[j] - self.upper[j]);
        }
        worst
    }

    /// Runs the dual simplex from the current basis.
    pub fn solve(&mut self, cutoff: f64, deadline: Option<Instant>) -> LpStatus {
        if (self.lu.is_none() || self.primal_dirty) && !self.reset_state() {
            return LpStatus::Numerical;
        }
        let limit = self
            .opts
            .max_iterations
            .unwrap_or(100_000 + 50 * (self.n + self.m) as u64);
        let start_iter = self.iterations;
        let mut rho = vec![0.0; self.m];
        let mut alpha_row = vec![0.0; self.n + self.m];
        let mut candidates: Vec<usize> = Vec::new();
        let mut col: Vec<f64> = Vec::new();
        let mut tau: Vec<f64> = Vec::new();
        let mut bps: Vec<(f64, usize)> = Vec::new();
        let mut flips: Vec<usize> = Vec::new();
        let mut shift: Vec<f64> = Vec::new();
        let mut retries = 0;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations - start_iter >= limit {
                return LpStatus::IterationLimit;
            }
            if self.iterations % 32 == 0 {
                if let Some(dl) = deadline {
                    if Instant::now() >= dl {
                        return LpStatus::TimeLimit;
                    }
                }
            }
            if self.etas.len() >= self.opts.refactor_every && !self.reset_state() {
                return LpStatus::Numerical;
            }
            if cutoff.is_finite() {
                let obj = self.objective();
                if obj > cutoff + 1e-9 * (1.0 + cutoff.abs()) {
                    return LpStatus::Cutoff;
                }
            }

            let bland = degenerate_run >= DEGENERACY_THRESHOLD;
            let Some((r, delta)) = self.choose_leaving(bland) else {
                if !self.etas.is_empty() {
                    if !self.reset_state() {
                        return LpStatus::Numerical;
                    }
                    if self.choose_leaving(false).is_some() {
                        continue;
                    }
                }
                if self.at_artificial() {
                    return LpStatus::Unbounded;
                }
                if self.max_row_violation() > 1e-6 {
                    return LpStatus::Numerical;
                }
                let obj = self.objective();
                if obj < self.dual_bound() - 1e-6 * (1.0 + obj.abs()) {
                    return LpStatus::Numerical;
                }
                return LpStatus::Optimal;
            };
            let s = if delta > 0.0 { 1.0 } else { -1.0 };

            // pivot row
            rho.iter_mut().for_each(|v| *v = 0.0);
            rho[r] = 1.0;
            self.btran(&mut rho);
            candidates.clear();
            let ptol = self.opts.pivot_tol;
            for j in 0..self.n + self.m {
                if self.pos[j] != NONBASIC || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = if j < self.n {
                    self.cols[j].iter().map(|&(row, v)| v * rho[row]).sum::<f64>()
                } else {
                    -rho[j - self.n]
                };
                alpha_row[j] = a;
                if a.abs() > ptol {
                    candidates.push(j);
                }
            }

            // breakpoints of the dual ratio test
            let dtol = self.opts.dual_tol;
            bps.clear();
            for &j in &candidates {
                let a = s * alpha_row[j];
                let ratio = if !self.at_upper[j] && a > ptol {
                    self.d[j].max(0.0) / a
                } else if self.at_upper[j] && a < -ptol {
                    self.d[j].min(0.0) / a
                } else {
                    continue;
                };
                bps.push((ratio, j));
            }
            if bps.is_empty() {
                if !self.etas.is_empty() && retries < 2 {
                    retries += 1;
                    if !self.reset_state() {
                        return LpStatus::Numerical;
                    }
                    continue;
                }
                return LpStatus::Infeasible;
            }
            flips.clear();
            let mut q = NONBASIC;
            if bland {
                let mut best_ratio = f64::INFINITY;
                for &(ratio, j) in &bps {
                    if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && j < q) {
                        best_ratio = best_ratio.min(ratio);
                        q = j;
                    }
                }
            } else {
                // long step: boxed variables whose breakpoint is passed while
                // the dual objective still improves flip to their other bound
                bps.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                let mut slope = delta.abs();
                let mut start = 0;
                while start + 1 < bps.len() {
                    let j = bps[start].1;
                    let range = self.upper[j] - self.lower[j];
                    if self.lower_inf[j] || self.upper_inf[j] {
                        break;
                    }
                    let drop = alpha_row[j].abs() * range;
                    if slope - drop <= 0.0 {
                        break;
                    }
                    slope -= drop;
                    flips.push(j);
                    start += 1;
                }
                // Harris pass over the remaining breakpoints
                let rest = &bps[start..];
                let theta_max = rest
                    .iter()
                    .map(|&(_, j)| (self.d[j].abs() + dtol) / alpha_row[j].abs())
                    .fold(f64::INFINITY, f64::min);
                let mut best_abs = 0.0;
                for &(ratio, j) in rest {
                    if ratio > theta_max {
                        break;
                    }
                    let a = alpha_row[j].abs();
                    if a > best_abs {
                        best_abs = a;
                        q = j;
                    }
                }
                if q == NONBASIC {
                    q = rest[0].1;
                }
            }
            debug_assert!(q != NONBASIC);

            // entering column
            col.clear();
            col.resize(self.m, 0.0);
            self.for_column(q, |row, v| col[row] = v);
            self.ftran(&mut col);
            let piv = col[r];
            let aq = alpha_row[q];
            if (piv - aq).abs() > 1e-7 * (1.0 + aq.abs()) || piv.abs() < ptol {
                if retries < 3 {
                    retries += 1;
                    if !self.reset_state() {
                        return LpStatus::Numerical;
                    }
                    continue;
                }
                return LpStatus::Numerical;
            }
            retries = 0;

            // steepest-edge helper: tau = B⁻¹ rho
            tau.clear();
            tau.extend_from_slice(&rho);
            self.ftran(&mut tau);

            // duals
            let theta_d = self.d[q] / aq;
            if theta_d.abs() <= self.opts.dual_tol {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            if theta_d != 0.0 {
                for &j in &candidates {
                    self.d[j] -= theta_d * alpha_row[j];
                }
            }
            let leaving = self.basic[r];
            self.d[q] = 0.0;
            self.d[leaving] = -theta_d;

            // bound flips
            if !flips.is_empty() {
                shift.clear();
                shift.resize(self.m, 0.0);
                for &j in &flips {
                    let new = if self.at_upper[j] { self.lower[j] } else { self.upper[j] };
                    let dx = new - self.x[j];
                    self.for_column(j, |row, a| shift[row] -= a * dx);
                    self.x[j] = new;
                    self.at_upper[j] = !self.at_upper[j];
                }
                self.ftran(&mut shift);
                for p in 0..self.m {
                    if shift[p] != 0.0 {
                        self.x[self.basic[p]] += shift[p];
                    }
                }
            }

            // primal
            let target = if s > 0.0 { self.upper[leaving] } else { self.lower[leaving] };
            let t = (self.x[leaving] - target) / piv;
            if t != 0.0 {
                for p in 0..self.m {
                    if col[p] != 0.0 {
                        self.x[self.basic[p]] -= t * col[p];
                    }
                }
            }
            self.x[q] += t;
            self.x[leaving] = target;
            self.at_upper[leaving] = s > 0.0;

            // weights
            let wr = self.weights[r];
            for p in 0..self.m {
                if p == r || col[p] == 0.0 {
                    continue;
                }
                let ratio = col[p] / piv;
                let w = self.weights[p] - 2.0 * ratio * tau[p] + ratio * ratio * wr;
                self.weights[p] = w.max(1e-8);
            }
            self.weights[r] = (wr / (piv * piv)).max(1e-8);

            // basis
            self.basic[r] = q;
            self.pos[q] = r;
            self.pos[leaving] = NONBASIC;
            let mut idx = Vec::new();
            let mut val = Vec::new();
            for (p, &v) in col.iter().enumerate() {
                if p != r && v.abs() > 1e-13 {
                    idx.push(p);
                    val.push(v);
                }
            }
            self.etas.push(Eta { r, piv, idx, val });
            self.iterations += 1;
        }
    }

    /// Row duals (`y` with `cᵀ − yᵀA = dᵀ`) of the current basis.
    pub fn row_duals(&mut self) -> Vec<f64> {
        if self.lu.is_none() && !self.reset_state() {
            return vec![0.0; self.m];
        }
        let mut y: Vec<f64> = self.basic.iter().map(|&j| self.cost[j]).collect();
        self.btran(&mut y);
        y
    }
}

/// Outcome of a standalone LP solve.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
}

/// Solves the LP relaxation of `model` from scratch.
pub fn simplex_solve(model: &MilpModel, opts: LpOptions) -> LpSolution {
    let mut lp = DualSimplex::new(model, opts);
    let status = lp.solve(f64::INFINITY, None);
    LpSolution {
        status,
        values: lp.values().to_vec(),
        objective: lp.objective(),
        iterations: lp.iterations(),
    }
}
