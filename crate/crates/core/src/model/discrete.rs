use super::{check_p, derive_big_m_discrete, Formulation, MilpModel, ModelMeta, Sense, VarKind};
use crate::error::Result;
use crate::eval::{CostMatrix, TIE_TOLERANCE};

pub(crate) fn discrete_meta(formulation: Formulation, costs: &CostMatrix, p: usize) -> ModelMeta {
    ModelMeta {
        formulation,
        n: costs.n(),
        m: Some(costs.m()),
        bounds: None,
        p,
    }
}

/// Indices of `y_j` and `x_ij` created by [`add_location_block`].
pub(crate) struct LocationVars {
    pub y: Vec<usize>,
    pub x: Vec<Vec<usize>>,
}

/// `y`, `x`, exactly `p` open sites, single assignment, linking and
/// closest-assignment rows.
pub(crate) fn add_location_block(model: &mut MilpModel, costs: &CostMatrix, p: usize) -> Result<LocationVars> {
    let (n, m) = (costs.n(), costs.m());
    let y = (0..m)
        .map(|j| model.add_var(format!("y_{j}"), VarKind::Binary, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let x = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| model.add_var(format!("x_{i}_{j}"), VarKind::Binary, 0.0, 1.0))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    model.add_constraint("open", y.iter().map(|&v| (v, 1.0)), Sense::Eq, p as f64)?;
    for i in 0..n {
        model.add_constraint(format!("assign_{i}"), x[i].iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0)?;
    }
    for i in 0..n {
        for j in 0..m {
            model.add_constraint(format!("link_{i}_{j}"), [(x[i][j], 1.0), (y[j], -1.0)], Sense::Le, 0.0)?;
        }
    }
    for i in 0..n {
        for j in 0..m {
            let worse: Vec<usize> = (0..m)
                .filter(|&l| costs.get(i, l) > costs.get(i, j) + TIE_TOLERANCE)
                .collect();
            if worse.is_empty() {
                continue;
            }
            let terms = std::iter::once((y[j], 1.0)).chain(worse.iter().map(|&l| (x[i][l], 1.0)));
            model.add_constraint(format!("cac_{i}_{j}"), terms, Sense::Le, 1.0)?;
        }
    }
    Ok(LocationVars { y, x })
}

/// Sites strictly cheaper than `j` for point `i` or for point `k`.
pub fn closer_sites(costs: &CostMatrix, i: usize, k: usize, j: usize) -> Vec<usize> {
    (0..costs.m())
        .filter(|&l| {
            costs.get(i, l) < costs.get(i, j) - TIE_TOLERANCE || costs.get(k, l) < costs.get(k, j) - TIE_TOLERANCE
        })
        .collect()
}

fn add_envy_vars(model: &mut MilpModel, n: usize, upper: f64) -> Result<Vec<Vec<usize>>> {
    // th[i][k] for k > i; entries with k <= i are unused placeholders
    let mut th = vec![vec![usize::MAX; n]; n];
    for i in 0..n {
        for k in i + 1..n {
            th[i][k] = model.add_var(format!("th_{i}_{k}"), VarKind::Continuous, 0.0, upper)?;
        }
    }
    Ok(th)
}

fn envy_objective(th: &[Vec<usize>]) -> Vec<(usize, f64)> {
    let n = th.len();
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |k| (th[i][k], 1.0)))
        .collect()
}

/// Assignment formulation with pairwise envy variables.
///
/// With `strengthen` the envy rows use `y_j` in place of the constant 1.
pub fn build_m1_discrete(costs: &CostMatrix, p: usize, strengthen: bool) -> Result<MilpModel> {
    check_p(p, costs.m())?;
    let (n, m) = (costs.n(), costs.m());
    let bm = derive_big_m_discrete(costs);
    let mut model = MilpModel::new(discrete_meta(Formulation::M1D { strengthened: strengthen }, costs, p));
    let LocationVars { y, x } = add_location_block(&mut model, costs, p)?;
    let th = add_envy_vars(&mut model, n, bm.theta)?;
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..m {
                let c = (costs.get(i, j) - costs.get(k, j)).abs();
                if c == 0.0 {
                    continue;
                }
                let name = format!("env_{i}_{k}_{j}");
                if strengthen {
                    let terms = [(th[i][k], 1.0), (x[i][j], -c), (x[k][j], -c), (y[j], c)];
                    model.add_constraint(name, terms, Sense::Ge, 0.0)?;
                } else {
                    let terms = [(th[i][k], 1.0), (x[i][j], -c), (x[k][j], -c)];
                    model.add_constraint(name, terms, Sense::Ge, -c)?;
                }
            }
        }
    }
    model.set_objective(envy_objective(&th), 0.0)?;
    Ok(model)
}

/// Location-only formulation over `y` and `θ`.
pub fn build_f1_discrete(costs: &CostMatrix, p: usize) -> Result<MilpModel> {
    check_p(p, costs.m())?;
    let (n, m) = (costs.n(), costs.m());
    let bm = derive_big_m_discrete(costs);
    let mut model = MilpModel::new(discrete_meta(Formulation::F1D, costs, p));
    let y = (0..m)
        .map(|j| model.add_var(format!("y_{j}"), VarKind::Binary, 0.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let th = add_envy_vars(&mut model, n, bm.theta)?;
    model.add_constraint("open", y.iter().map(|&v| (v, 1.0)), Sense::Eq, p as f64)?;
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..m {
                let c = (costs.get(i, j) - costs.get(k, j)).abs();
                if c == 0.0 {
                    continue;
                }
                let terms = [(th[i][k], 1.0), (y[j], -c)]
                    .into_iter()
                    .chain(closer_sites(costs, i, k, j).into_iter().map(|l| (y[l], c)));
                model.add_constraint(format!("env_{i}_{k}_{j}"), terms, Sense::Ge, 0.0)?;
            }
        }
    }
    model.set_objective(envy_objective(&th), 0.0)?;
    Ok(model)
}

/// k-sum formulation: per site, the sorted cluster costs enter through the
/// dual of the k-largest selection problem.
pub fn build_m3_discrete(costs: &CostMatrix, p: usize) -> Result<MilpModel> {
    check_p(p, costs.m())?;
    let (n, m) = (costs.n(), costs.m());
    let nf = n as f64;
    let mut model = MilpModel::new(discrete_meta(Formulation::M3D, costs, p));
    let LocationVars { x, .. } = add_location_block(&mut model, costs, p)?;
    let col_max: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| costs.get(i, j)).fold(0.0, f64::max))
        .collect();

    let mut al = vec![vec![0; m]; n];
    for i in 0..n {
        for j in 0..m {
            al[i][j] = model.add_var(format!("al_{i}_{j}"), VarKind::Continuous, 0.0, nf)?;
        }
    }
    // u[j][k][l] for l <= k, v[j][k][i]
    let mut u = vec![vec![Vec::new(); n]; m];
    let mut v = vec![vec![Vec::new(); n]; m];
    for j in 0..m {
        for k in 0..n {
            for l in 0..=k {
                u[j][k].push(model.add_var(format!("u_{k}_{l}_{j}"), VarKind::Continuous, 0.0, col_max[j])?);
            }
            for i in 0..n {
                v[j][k].push(model.add_var(format!("v_{k}_{i}_{j}"), VarKind::Continuous, 0.0, col_max[j])?);
            }
        }
    }

    for i in 0..n {
        for j in 0..m {
            // al_ij >= sum_l x_lj - n (1 - x_ij)
            let terms = std::iter::once((al[i][j], 1.0))
                .chain((0..n).map(|l| (x[l][j], -1.0)))
                .chain(std::iter::once((x[i][j], -nf)));
            model.add_constraint(format!("alpha_{i}_{j}"), terms, Sense::Ge, -nf)?;
        }
    }
    for j in 0..m {
        for k in 0..n {
            for l in 0..=k {
                for i in 0..n {
                    let c = costs.get(i, j);
                    if c == 0.0 {
                        continue;
                    }
                    let terms = [(u[j][k][l], 1.0), (v[j][k][i], 1.0), (x[i][j], -c)];
                    model.add_constraint(format!("ksum_{k}_{l}_{i}_{j}"), terms, Sense::Ge, 0.0)?;
                }
            }
        }
    }

    let mut obj = Vec::new();
    for j in 0..m {
        for k in 0..n {
            obj.extend(u[j][k].iter().map(|&c| (c, 2.0)));
            obj.extend(v[j][k].iter().map(|&c| (c, 2.0)));
        }
    }
    for i in 0..n {
        for j in 0..m {
            let c = costs.get(i, j);
            obj.push((x[i][j], -(2.0 * nf + 1.0) * c));
            obj.push((al[i][j], c));
        }
    }
    model.set_objective(obj, 0.0)?;
    Ok(model)
}
