use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{binomial, Colex, DEFAULT_CAP, DEFAULT_TIE_LIMIT};
use crate::error::{Error, Result};
use crate::eval::{evaluate_open, facility_costs, Assignment, ContinuousSolution, Instance, Measure};
use crate::model::LocationBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridStatus {
    /// Every `p`-subset of grid nodes was evaluated.
    Exhaustive,
    /// The tuple count exceeded the cap; the result comes from multistart
    /// descent.
    Heuristic,
}

#[derive(Debug, Clone)]
pub struct GridConfig {
    pub step: f64,
    pub refine_rounds: usize,
    /// Largest number of grid tuples evaluated exhaustively.
    pub cap: u128,
    /// Exhaustive search is only attempted for `p` up to this value.
    pub max_exhaustive_p: usize,
    pub starts: usize,
    pub seed: u64,
}

impl GridConfig {
    pub fn new(step: f64, refine_rounds: usize) -> GridConfig {
        GridConfig {
            step,
            refine_rounds,
            cap: DEFAULT_CAP,
            max_exhaustive_p: 3,
            starts: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub solution: ContinuousSolution,
    pub status: GridStatus,
    /// Objective after the grid stage and after every refinement round.
    pub history: Vec<f64>,
}

struct Evaluator<'a> {
    instance: &'a Instance,
    measure: Measure,
}

impl Evaluator<'_> {
    fn value(&self, facilities: &[Vec<f64>]) -> Result<(Assignment, f64)> {
        let phi = facility_costs(self.instance, facilities)?;
        let open: Vec<usize> = (0..facilities.len()).collect();
        evaluate_open(&phi, &open, self.measure, DEFAULT_TIE_LIMIT)
    }
}

fn grid_axes(bx: &LocationBox, step: f64) -> Vec<Vec<f64>> {
    (0..bx.dim())
        .map(|l| {
            let (lo, hi) = (bx.low[l], bx.high[l]);
            let count = ((hi - lo) / step + 1e-9).floor() as usize;
            let mut axis: Vec<f64> = (0..=count).map(|t| lo + t as f64 * step).collect();
            if hi - axis[axis.len() - 1] > 1e-9 {
                axis.push(hi);
            }
            axis
        })
        .collect()
}

fn grid_nodes(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut nodes = vec![Vec::new()];
    for axis in axes {
        nodes = nodes
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    nodes
}

/// Coordinate descent with moves of `h` along every axis, clamped to the
/// box, until no move improves.
fn descend(eval: &Evaluator, bx: &LocationBox, fac: &mut [Vec<f64>], value: &mut f64, h: f64) -> Result<()> {
    loop {
        let mut improved = false;
        for f in 0..fac.len() {
            for l in 0..bx.dim() {
                for dir in [-1.0, 1.0] {
                    let moved = (fac[f][l] + dir * h).clamp(bx.low[l], bx.high[l]);
                    if moved == fac[f][l] {
                        continue;
                    }
                    let old = fac[f][l];
                    fac[f][l] = moved;
                    let (_, v) = eval.value(fac)?;
                    if v < *value - 1e-12 * value.abs().max(1.0) {
                        *value = v;
                        improved = true;
                    } else {
                        fac[f][l] = old;
                    }
                }
            }
        }
        if !improved {
            return Ok(());
        }
    }
}

/// Approximate continuous optimum: the best `p`-set of grid nodes (spacing
/// `step`, restricted to `bx`), then `refine_rounds` rounds of coordinate
/// descent with the move length halved each round.
pub fn solve_continuous_grid(
    instance: &Instance,
    p: usize,
    measure: Measure,
    bx: &LocationBox,
    config: &GridConfig,
) -> Result<GridResult> {
    if !(config.step > 0.0) || !config.step.is_finite() {
        return Err(Error::usage("grid step must be positive"));
    }
    if p == 0 {
        return Err(Error::usage("p must be at least 1"));
    }
    if bx.dim() != instance.dim() {
        return Err(Error::usage("box and instance dimensions differ"));
    }
    let eval = Evaluator { instance, measure };
    let nodes = grid_nodes(&grid_axes(bx, config.step));
    let tuples = binomial(nodes.len(), p);
    let exhaustive = p <= config.max_exhaustive_p && tuples > 0 && tuples <= config.cap;

    let (mut fac, mut value, status) = if exhaustive {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for idx in Colex::new(nodes.len(), p) {
            let fac: Vec<Vec<f64>> = idx.iter().map(|&g| nodes[g].clone()).collect();
            let (_, v) = eval.value(&fac)?;
            if best.as_ref().map_or(true, |(_, b)| v < *b) {
                best = Some((idx, v));
            }
        }
        let (idx, v) = best.expect("at least one tuple");
        (idx.iter().map(|&g| nodes[g].clone()).collect::<Vec<_>>(), v, GridStatus::Exhaustive)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
        for _ in 0..config.starts.max(1) {
            let mut fac: Vec<Vec<f64>> = (0..p).map(|_| nodes[rng.random_range(0..nodes.len())].clone()).collect();
            let (_, mut v) = eval.value(&fac)?;
            descend(&eval, bx, &mut fac, &mut v, config.step)?;
            if best.as_ref().map_or(true, |(_, b)| v < *b) {
                best = Some((fac, v));
            }
        }
        let (fac, v) = best.expect("at least one start");
        (fac, v, GridStatus::Heuristic)
    };

    let mut history = vec![value];
    let mut h = config.step;
    for _ in 0..config.refine_rounds {
        h /= 2.0;
        descend(&eval, bx, &mut fac, &mut value, h)?;
        history.push(value);
    }
    let (assignment, objective) = eval.value(&fac)?;
    Ok(GridResult {
        solution: ContinuousSolution {
            facilities: fac,
            assignment,
            objective,
            measure,
        },
        status,
        history,
    })
}

/// Coordinate descent from given facilities: one round at `step`, then
/// `rounds` more with the move length halved each time. Never worsens the
/// starting value.
pub fn refine_facilities(
    instance: &Instance,
    measure: Measure,
    bx: &LocationBox,
    facilities: &[Vec<f64>],
    step: f64,
    rounds: usize,
) -> Result<ContinuousSolution> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::usage("refinement step must be positive"));
    }
    if facilities.iter().any(|f| !bx.contains(f)) {
        return Err(Error::usage("starting facilities lie outside the box"));
    }
    let eval = Evaluator { instance, measure };
    let mut fac = facilities.to_vec();
    let (_, mut value) = eval.value(&fac)?;
    let mut h = step;
    for round in 0..=rounds {
        if round > 0 {
            h /= 2.0;
        }
        descend(&eval, bx, &mut fac, &mut value, h)?;
    }
    let (assignment, objective) = eval.value(&fac)?;
    Ok(ContinuousSolution {
        facilities: fac,
        assignment,
        objective,
        measure,
    })
}
