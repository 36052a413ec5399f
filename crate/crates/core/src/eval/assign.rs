use super::{measure_value, Assignment, CostMatrix, Measure};
use crate::error::{Error, Result};

/// Absolute tolerance under which two costs are considered tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// ℓ1 distance between two points of equal dimension.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::usage(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// All closest assignments of points to the `open` facilities.
///
/// Points with several minimum-cost facilities get every alternative
/// enumerated, as long as at most `tie_limit` points are tied. Past that
/// limit a single assignment picking the lowest tied index is returned.
/// The output is sorted lexicographically by assignment vector.
pub fn closest_assignments(
    costs: &CostMatrix,
    open: &[usize],
    tie_limit: usize,
) -> Result<Vec<Assignment>> {
    let mut open = open.to_vec();
    open.sort_unstable();
    open.dedup();
    if open.is_empty() {
        return Err(Error::usage("open facility set is empty"));
    }
    if let Some(&j) = open.iter().find(|&&j| j >= costs.m()) {
        return Err(Error::usage(format!("facility {j} is out of range (m = {})", costs.m())));
    }

    // choices[i]: minimum-cost open facilities of point i, ascending
    let choices: Vec<Vec<usize>> = (0..costs.n())
        .map(|i| {
            let best = open
                .iter()
                .map(|&j| costs.get(i, j))
                .fold(f64::INFINITY, f64::min);
            open.iter()
                .copied()
                .filter(|&j| costs.get(i, j) <= best + TIE_TOLERANCE)
                .collect()
        })
        .collect();

    let tied = choices.iter().filter(|c| c.len() > 1).count();
    if tied > tie_limit {
        let assign = choices.iter().map(|c| c[0]).collect();
        return Ok(vec![Assignment::new(assign, open)?]);
    }

    // odometer over the tied points, last index fastest => lexicographic order
    let mut out = Vec::new();
    let mut pos = vec![0usize; choices.len()];
    loop {
        let assign = choices.iter().zip(&pos).map(|(c, &k)| c[k]).collect();
        out.push(Assignment::new(assign, open.clone())?);
        let mut i = choices.len();
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < choices[i].len() {
                break;
            }
            pos[i] = 0;
        }
    }
}

/// Best closest assignment for `open` under `measure`, with its value.
///
/// Among tied assignments the first (lexicographically smallest) one
/// attaining the minimum wins.
pub fn evaluate_open(
    costs: &CostMatrix,
    open: &[usize],
    measure: Measure,
    tie_limit: usize,
) -> Result<(Assignment, f64)> {
    let mut best: Option<(Assignment, f64)> = None;
    for a in closest_assignments(costs, open, tie_limit)? {
        let v = measure_value(measure, &a.costs(costs), &a);
        if best.as_ref().map_or(true, |(_, b)| v < *b - TIE_TOLERANCE) {
            best = Some((a, v));
        }
    }
    Ok(best.expect("closest_assignments returns at least one assignment"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> CostMatrix {
        let pts: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 10.0, 14.0];
        CostMatrix::from_fn(6, 6, |i, j| (pts[i] - pts[j]).abs()).unwrap()
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance(&[8.0, 1.0], &[8.0, 9.0]).unwrap(), 8.0);
        assert_eq!(l1_distance(&[3.5, -2.0], &[3.5, -2.0]).unwrap(), 0.0);
        assert_eq!(l1_distance(&[1.0, 13.0], &[4.0, 6.5]).unwrap(), 9.5);
        assert!(l1_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn tied_point_yields_two_assignments() {
        let c = example1();
        // sites 2 and 10 are indices 1 and 4; the point at 6 is index 3
        let all = closest_assignments(&c, &[1, 4], 12).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].assign(), &[1, 1, 1, 1, 4, 4]);
        assert_eq!(all[1].assign(), &[1, 1, 1, 4, 4, 4]);
    }

    #[test]
    fn tie_limit_falls_back_to_lowest_index() {
        let c = example1();
        let all = closest_assignments(&c, &[1, 4], 0).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].assign(), &[1, 1, 1, 1, 4, 4]);
    }

    #[test]
    fn all_open_means_self_service() {
        let c = example1();
        let all = closest_assignments(&c, &[0, 1, 2, 3, 4, 5], 12).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].assign(), &[0, 1, 2, 3, 4, 5]);
        assert!(all[0].costs(&c).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_open_is_rejected() {
        assert!(closest_assignments(&example1(), &[], 12).is_err());
        assert!(closest_assignments(&example1(), &[9], 12).is_err());
    }

    #[test]
    fn distinct_minima_match_row_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 50 {
            let rows: Vec<Vec<f64>> = (0..8)
                .map(|_| (0..8).map(|_| rng.random_range(0..100) as f64).collect())
                .collect();
            let c = CostMatrix::new(rows.clone()).unwrap();
            let open = [0usize, 3, 5];
            let argmins: Vec<Option<usize>> = rows
                .iter()
                .map(|r| {
                    let mut best = open[0];
                    let mut unique = true;
                    for &j in &open[1..] {
                        if r[j] < r[best] {
                            best = j;
                            unique = true;
                        } else if r[j] == r[best] {
                            unique = false;
                        }
                    }
                    unique.then_some(best)
                })
                .collect();
            if argmins.iter().any(Option::is_none) {
                continue;
            }
            let all = closest_assignments(&c, &open, 12).unwrap();
            assert_eq!(all.len(), 1);
            let expect: Vec<usize> = argmins.into_iter().map(Option::unwrap).collect();
            assert_eq!(all[0].assign(), expect.as_slice());
            checked += 1;
        }
    }

    #[test]
    fn intra_envy_prefers_cheaper_tie() {
        let c = example1();
        let (a, v) = evaluate_open(&c, &[1, 4], Measure::IntraEnvy, 12).unwrap();
        assert_eq!(v, 12.0);
        assert_eq!(a.assign(), &[1, 1, 1, 4, 4, 4]);
    }
}
