//! Sparse LU factorization with Markowitz pivot selection and threshold
//! partial pivoting.
//!
//! The factor stores the elimination as a sequence of pivots. Pivot `t`
//! eliminates column `piv_col[t]` using row `piv_row[t]`; the multipliers
//! applied to the other rows form the L part, and the pivot row as it stood
//! at that moment forms row `t` of U.

const SINGULAR_TOL: f64 = 1e-11;
const THRESHOLD: f64 = 0.1;
const SEARCH_LIMIT: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Singular {
    /// Columns that could not be pivoted.
    pub columns: Vec<usize>,
    /// Rows left without a pivot, as many as `columns`.
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct LuFactor {
    k: usize,
    piv_row: Vec<usize>,
    piv_col: Vec<usize>,
    piv_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
}

struct Active {
    rows: Vec<Vec<(usize, f64)>>,
    colpat: Vec<Vec<usize>>,
    ccount: Vec<usize>,
    row_done: Vec<bool>,
    col_done: Vec<bool>,
    col_bucket: Vec<Vec<usize>>,
    row_bucket: Vec<Vec<usize>>,
}

impl Active {
    fn value(&self, i: usize, c: usize) -> Option<f64> {
        self.rows[i].iter().find(|e| e.0 == c).map(|e| e.1)
    }

    fn col_entries(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.colpat[c]
            .iter()
            .filter(|&&i| !self.row_done[i])
            .filter_map(move |&i| self.value(i, c).map(|v| (i, v)))
    }

    fn push_col(&mut self, c: usize) {
        let cnt = self.ccount[c];
        if cnt >= self.col_bucket.len() {
            self.col_bucket.resize(cnt + 1, Vec::new());
        }
        self.col_bucket[cnt].push(c);
    }

    fn push_row(&mut self, r: usize) {
        let cnt = self.rows[r].len();
        if cnt >= self.row_bucket.len() {
            self.row_bucket.resize(cnt + 1, Vec::new());
        }
        self.row_bucket[cnt].push(r);
    }

    /// Best acceptable pivot in column `c`: `(row, value, markowitz cost)`.
    fn best_in_col(&self, c: usize) -> Option<(usize, f64, usize)> {
        let entries: Vec<(usize, f64)> = self.col_entries(c).collect();
        let cmax = entries.iter().map(|e| e.1.abs()).fold(0.0, f64::max);
        if cmax < SINGULAR_TOL {
            return None;
        }
        let cc = entries.len().saturating_sub(1);
        entries
            .iter()
            .filter(|e| e.1.abs() >= THRESHOLD * cmax)
            .map(|&(i, v)| (i, v, (self.rows[i].len() - 1) * cc))
            .min_by(|a, b| a.2.cmp(&b.2).then(b.1.abs().total_cmp(&a.1.abs())).then(a.0.cmp(&b.0)))
    }
}

impl LuFactor {
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.k
    }

    /// Factors the `k × k` matrix given by its sparse columns
    /// (`(row, value)` pairs, rows in `0..k`).
    pub fn factor(k: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactor, Singular> {
        assert_eq!(columns.len(), k, "expected {k} columns");
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        let mut colpat: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (c, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                if v != 0.0 {
                    rows[r].push((c, v));
                    colpat[c].push(r);
                }
            }
        }
        let ccount = colpat.iter().map(Vec::len).collect();
        let mut act = Active {
            rows,
            colpat,
            ccount,
            row_done: vec![false; k],
            col_done: vec![false; k],
            col_bucket: Vec::new(),
            row_bucket: Vec::new(),
        };
        for c in 0..k {
            act.push_col(c);
        }
        for r in 0..k {
            act.push_row(r);
        }

        let mut f = LuFactor {
            k,
            l_start: vec![0],
            u_start: vec![0],
            ..Default::default()
        };
        let mut mark = vec![usize::MAX; k];

        for _ in 0..k {
            let Some((r, c, p)) = select_pivot(&mut act) else {
                break;
            };
            // U row: the pivot row without the pivot entry
            let prow: Vec<(usize, f64)> = act.rows[r].iter().copied().filter(|e| e.0 != c).collect();
            for &(cc, v) in &prow {
                f.u_idx.push(cc);
                f.u_val.push(v);
            }
            f.u_start.push(f.u_idx.len());
            f.piv_row.push(r);
            f.piv_col.push(c);
            f.piv_val.push(p);
            act.row_done[r] = true;
            act.col_done[c] = true;

            let others: Vec<(usize, f64)> = act.col_entries(c).filter(|e| e.0 != r).collect();
            for (i, aic) in others {
                let l = aic / p;
                f.l_idx.push(i);
                f.l_val.push(l);
                let row = &mut act.rows[i];
                row.retain(|e| e.0 != c);
                for (pos, e) in row.iter().enumerate() {
                    mark[e.0] = pos;
                }
                let mut fill = Vec::new();
                for &(cc, v) in &prow {
                    let m = mark[cc];
                    if m != usize::MAX && m < row.len() && row[m].0 == cc {
                        row[m].1 -= l * v;
                    } else {
                        fill.push((cc, -l * v));
                    }
                }
                for e in row.iter() {
                    mark[e.0] = usize::MAX;
                }
                // cancelled entries stay in place so column patterns never hold duplicates
                row.extend(fill.iter().copied());
                for &(cc, _) in &fill {
                    act.colpat[cc].push(i);
                    act.ccount[cc] += 1;
                }
                for &(cc, _) in &fill {
                    act.push_col(cc);
                }
                act.push_row(i);
            }
            f.l_start.push(f.l_idx.len());
            for &(cc, _) in &prow {
                act.ccount[cc] -= 1;
                act.push_col(cc);
            }
        }

        if f.piv_row.len() < k {
            let bad_cols = (0..k).filter(|&c| !act.col_done[c]).collect();
            let free_rows = (0..k).filter(|&r| !act.row_done[r]).collect();
            return Err(Singular {
                columns: bad_cols,
                rows: free_rows,
            });
        }
        Ok(f)
    }

    /// Solves `M x = b`. `b` is indexed by row on entry and holds `x`,
    /// indexed by column, on return. `work` must have length `k`.
    pub fn solve(&self, b: &mut [f64], work: &mut [f64]) {
        for t in 0..self.k {
            let br = b[self.piv_row[t]];
            if br != 0.0 {
                for s in self.l_start[t]..self.l_start[t + 1] {
                    b[self.l_idx[s]] -= self.l_val[s] * br;
                }
            }
        }
        for t in (0..self.k).rev() {
            let mut v = b[self.piv_row[t]];
            for s in self.u_start[t]..self.u_start[t + 1] {
                v -= self.u_val[s] * work[self.u_idx[s]];
            }
            work[self.piv_col[t]] = v / self.piv_val[t];
        }
        b.copy_from_slice(work);
    }

    /// Solves `Mᵀ y = c`. `c` is indexed by column on entry and holds `y`,
    /// indexed by row, on return.
    pub fn solve_transpose(&self, c: &mut [f64], work: &mut [f64]) {
        for t in 0..self.k {
            let w = c[self.piv_col[t]] / self.piv_val[t];
            work[self.piv_row[t]] = w;
            if w != 0.0 {
                for s in self.u_start[t]..self.u_start[t + 1] {
                    c[self.u_idx[s]] -= self.u_val[s] * w;
                }
            }
        }
        for t in (0..self.k).rev() {
            let r = self.piv_row[t];
            let mut acc = 0.0;
            for s in self.l_start[t]..self.l_start[t + 1] {
                acc += self.l_val[s] * work[self.l_idx[s]];
            }
            work[r] -= acc;
        }
        c.copy_from_slice(work);
    }
}

fn select_pivot(act: &mut Active) -> Option<(usize, usize, f64)> {
    // column singletons need no multipliers and cause no fill
    while let Some(c) = act.col_bucket.get_mut(1).and_then(Vec::pop) {
        if act.col_done[c] || act.ccount[c] != 1 {
            continue;
        }
        if let Some((r, v)) = act.col_entries(c).next() {
            if v.abs() >= SINGULAR_TOL {
                return Some((r, c, v));
            }
        }
    }
    let mut best: Option<(usize, usize, f64, usize)> = None;
    let mut examined = 0;
    let max_count = act.col_bucket.len().max(act.row_bucket.len());
    for cnt in 1..max_count {
        if let Some((_, _, _, cost)) = best {
            if cost <= (cnt - 1) * (cnt - 1) {
                break;
            }
        }
        // rows of this length
        if cnt < act.row_bucket.len() {
            let mut keep = Vec::new();
            while let Some(r) = act.row_bucket[cnt].pop() {
                if act.row_done[r] || act.rows[r].len() != cnt {
                    continue;
                }
                keep.push(r);
                for &(c, v) in &act.rows[r] {
                    let cmax = act.col_entries(c).map(|e| e.1.abs()).fold(0.0, f64::max);
                    if v.abs() >= THRESHOLD * cmax && v.abs() >= SINGULAR_TOL {
                        let cost = (cnt - 1) * act.ccount[c].saturating_sub(1);
                        if best.map_or(true, |b| cost < b.3) {
                            best = Some((r, c, v, cost));
                        }
                    }
                }
                examined += 1;
                if examined >= SEARCH_LIMIT {
                    break;
                }
            }
            act.row_bucket[cnt].extend(keep);
        }
        if cnt < act.col_bucket.len() {
            let mut keep = Vec::new();
            while let Some(c) = act.col_bucket[cnt].pop() {
                if act.col_done[c] || act.ccount[c] != cnt {
                    continue;
                }
                keep.push(c);
                if let Some((r, v, cost)) = act.best_in_col(c) {
                    if best.map_or(true, |b| cost < b.3) {
                        best = Some((r, c, v, cost));
                    }
                }
                examined += 1;
                if examined >= SEARCH_LIMIT {
                    break;
                }
            }
            act.col_bucket[cnt].extend(keep);
        }
        if examined >= SEARCH_LIMIT && best.is_some() {
            break;
        }
    }
    if best.is_none() {
        // exhaustive fallback over every remaining column
        for c in 0..act.col_done.len() {
            if act.col_done[c] {
                continue;
            }
            if let Some((r, v, cost)) = act.best_in_col(c) {
                if best.map_or(true, |b| cost < b.3) {
                    best = Some((r, c, v, cost));
                }
            }
        }
    }
    best.map(|(r, c, v, _)| (r, c, v))
}
