use super::{derive_big_m_continuous, BigM, Formulation, LocationBox, MilpModel, ModelMeta, Sense, VarKind};
use crate::error::{Error, Result};
use crate::eval::Instance;

pub(crate) fn continuous_meta(formulation: Formulation, instance: &Instance, p: usize, bx: &LocationBox) -> ModelMeta {
    ModelMeta {
        formulation,
        n: instance.n(),
        m: None,
        bounds: Some(bx.clone()),
        p,
    }
}

/// Variable indices shared by every continuous formulation.
pub(crate) struct PlanarVars {
    pub x: Vec<Vec<usize>>,
    pub phi: Vec<Vec<usize>>,
}

pub(crate) fn check_continuous(instance: &Instance, p: usize, bx: &LocationBox) -> Result<BigM> {
    if p == 0 {
        return Err(Error::usage("p must be at least 1"));
    }
    derive_big_m_continuous(instance, bx)
}

/// Facility coordinates, the ℓ1 linearization `w = |a - X|`, assignment
/// variables and `φ`. With `conditional`, `φ_ij` equals the distance only
/// when `x_ij = 1` and is zero otherwise; without it `φ_ij` is always the
/// distance.
pub(crate) fn add_planar_block(
    model: &mut MilpModel,
    instance: &Instance,
    p: usize,
    bx: &LocationBox,
    bm: &BigM,
    conditional: bool,
) -> Result<PlanarVars> {
    let (n, d) = (instance.n(), instance.dim());
    let mut coord = vec![Vec::with_capacity(d); p];
    for j in 0..p {
        for l in 0..d {
            coord[j].push(model.add_var(format!("X_{j}_{l}"), VarKind::Continuous, bx.low[l], bx.high[l])?);
        }
    }
    let mut w = vec![vec![Vec::with_capacity(d); p]; n];
    let mut xi = vec![vec![Vec::with_capacity(d); p]; n];
    for i in 0..n {
        let a = instance.point(i);
        for j in 0..p {
            for l in 0..d {
                let hi = bx.max_coord_gap(a, l);
                w[i][j].push(model.add_var(format!("w_{i}_{j}_{l}"), VarKind::Continuous, 0.0, hi)?);
                xi[i][j].push(model.add_var(format!("xi_{i}_{j}_{l}"), VarKind::Binary, 0.0, 1.0)?);
            }
        }
    }
    let mut x = vec![Vec::with_capacity(p); n];
    for i in 0..n {
        for j in 0..p {
            x[i].push(model.add_var(format!("x_{i}_{j}"), VarKind::Binary, 0.0, 1.0)?);
        }
    }
    let mut phi = vec![Vec::with_capacity(p); n];
    for i in 0..n {
        let hi = bx.max_distance(instance.point(i));
        for j in 0..p {
            phi[i].push(model.add_var(format!("phi_{i}_{j}"), VarKind::Continuous, 0.0, hi)?);
        }
    }

    for i in 0..n {
        model.add_constraint(format!("assign_{i}"), x[i].iter().map(|&v| (v, 1.0)), Sense::Eq, 1.0)?;
    }
    for i in 0..n {
        let a = instance.point(i);
        for j in 0..p {
            for l in 0..d {
                let (wv, xv, sv, u) = (w[i][j][l], coord[j][l], xi[i][j][l], bm.abs[l]);
                // w <= a - X + U (1 - xi)
                model.add_constraint(format!("w1_{i}_{j}_{l}"), [(wv, 1.0), (xv, 1.0), (sv, u)], Sense::Le, a[l] + u)?;
                // w >= a - X
                model.add_constraint(format!("w2_{i}_{j}_{l}"), [(wv, 1.0), (xv, 1.0)], Sense::Ge, a[l])?;
                // w <= X - a + U xi
                model.add_constraint(format!("w3_{i}_{j}_{l}"), [(wv, 1.0), (xv, -1.0), (sv, -u)], Sense::Le, -a[l])?;
                // w >= X - a
                model.add_constraint(format!("w4_{i}_{j}_{l}"), [(wv, 1.0), (xv, -1.0)], Sense::Ge, -a[l])?;
            }
        }
    }
    let u = bm.close;
    for i in 0..n {
        for j in 0..p {
            let dist = || w[i][j].iter().map(|&v| (v, -1.0));
            if conditional {
                let on = [(phi[i][j], 1.0), (x[i][j], u)];
                model.add_constraint(format!("phiub_{i}_{j}"), on.into_iter().chain(dist()), Sense::Le, u)?;
                let on = [(phi[i][j], 1.0), (x[i][j], -u)];
                model.add_constraint(format!("philb_{i}_{j}"), on.into_iter().chain(dist()), Sense::Ge, -u)?;
                model.add_constraint(format!("phion_{i}_{j}"), [(phi[i][j], 1.0), (x[i][j], -u)], Sense::Le, 0.0)?;
            } else {
                let terms = std::iter::once((phi[i][j], 1.0)).chain(dist());
                model.add_constraint(format!("dist_{i}_{j}"), terms, Sense::Eq, 0.0)?;
            }
        }
    }
    // closest assignment: the serving facility is no farther than any other
    for i in 0..n {
        for j in 0..p {
            for l in 0..p {
                if l == j {
                    continue;
                }
                let name = format!("close_{i}_{j}_{l}");
                if conditional {
                    let terms = w[i][j]
                        .iter()
                        .map(|&v| (v, 1.0))
                        .chain(w[i][l].iter().map(|&v| (v, -1.0)))
                        .chain(std::iter::once((x[i][j], u)));
                    model.add_constraint(name, terms, Sense::Le, u)?;
                } else {
                    let terms = [(phi[i][j], 1.0), (phi[i][l], -1.0), (x[i][j], u)];
                    model.add_constraint(name, terms, Sense::Le, u)?;
                }
            }
        }
    }
    Ok(PlanarVars { x, phi })
}

/// Pairwise-envy formulation with big-M linking.
pub fn build_m1_continuous(instance: &Instance, p: usize, bx: &LocationBox) -> Result<MilpModel> {
    let bm = check_continuous(instance, p, bx)?;
    let n = instance.n();
    let mut model = MilpModel::new(continuous_meta(Formulation::M1C, instance, p, bx));
    let PlanarVars { x, phi, .. } = add_planar_block(&mut model, instance, p, bx, &bm, false)?;
    let u = bm.theta;
    let mut obj = Vec::new();
    let mut th = vec![vec![usize::MAX; n]; n];
    for i in 0..n {
        for k in i + 1..n {
            th[i][k] = model.add_var(format!("th_{i}_{k}"), VarKind::Continuous, 0.0, u)?;
            obj.push((th[i][k], 1.0));
        }
    }
    for i in 0..n {
        for k in i + 1..n {
            for j in 0..p {
                // th >= ±(phi_ij - phi_kj) - U (2 - x_ij - x_kj)
                let base = [(th[i][k], 1.0), (x[i][j], -u), (x[k][j], -u)];
                let a = [(phi[i][j], -1.0), (phi[k][j], 1.0)];
                let b = [(phi[i][j], 1.0), (phi[k][j], -1.0)];
                model.add_constraint(format!("th1_{i}_{k}_{j}"), base.into_iter().chain(a), Sense::Ge, -2.0 * u)?;
                model.add_constraint(format!("th2_{i}_{k}_{j}"), base.into_iter().chain(b), Sense::Ge, -2.0 * u)?;
            }
        }
    }
    model.set_objective(obj, 0.0)?;
    Ok(model)
}

/// α variables and their linking rows, shared by the two k-sum formulations.
fn add_alpha_block(model: &mut MilpModel, phi: &[Vec<usize>], x: &[Vec<usize>], bm: &BigM) -> Result<Vec<Vec<usize>>> {
    let n = phi.len();
    let p = phi.first().map_or(0, Vec::len);
    let mut al = vec![Vec::with_capacity(p); n];
    for i in 0..n {
        for j in 0..p {
            al[i].push(model.add_var(format!("al_{i}_{j}"), VarKind::Continuous, 0.0, bm.alpha)?);
        }
    }
    for i in 0..n {
        for j in 0..p {
            // al_ij >= sum_l phi_lj - U (1 - x_ij)
            let terms = [(al[i][j], 1.0), (x[i][j], -bm.alpha)]
                .into_iter()
                .chain((0..n).map(|l| (phi[l][j], -1.0)));
            model.add_constraint(format!("alpha_{i}_{j}"), terms, Sense::Ge, -bm.alpha)?;
        }
    }
    Ok(al)
}

fn ksum_tail(phi: &[Vec<usize>], al: &[Vec<usize>], n: usize, obj: &mut Vec<(usize, f64)>) {
    let w = -(2.0 * n as f64 + 1.0);
    for i in 0..n {
        for j in 0..phi[i].len() {
            obj.push((phi[i][j], w));
            obj.push((al[i][j], 1.0));
        }
    }
}

/// Ordered-median formulation with the `u`/`v` k-sum representation.
pub fn build_m2_continuous(instance: &Instance, p: usize, bx: &LocationBox) -> Result<MilpModel> {
    let bm = check_continuous(instance, p, bx)?;
    let n = instance.n();
    let mut model = MilpModel::new(continuous_meta(Formulation::M2C, instance, p, bx));
    let PlanarVars { x, phi, .. } = add_planar_block(&mut model, instance, p, bx, &bm, true)?;
    let al = add_alpha_block(&mut model, &phi, &x, &bm)?;
    let mut obj = Vec::new();
    for j in 0..p {
        for k in 0..n {
            let u: Vec<usize> = (0..=k)
                .map(|l| model.add_var(format!("u_{k}_{l}_{j}"), VarKind::Continuous, 0.0, bm.close))
                .collect::<Result<_>>()?;
            let v: Vec<usize> = (0..n)
                .map(|i| model.add_var(format!("v_{k}_{i}_{j}"), VarKind::Continuous, 0.0, bm.close))
                .collect::<Result<_>>()?;
            for (l, &ul) in u.iter().enumerate() {
                for i in 0..n {
                    let terms = [(ul, 1.0), (v[i], 1.0), (phi[i][j], -1.0)];
                    model.add_constraint(format!("ksum_{k}_{l}_{i}_{j}"), terms, Sense::Ge, 0.0)?;
                }
            }
            obj.extend(u.iter().chain(&v).map(|&c| (c, 2.0)));
        }
    }
    ksum_tail(&phi, &al, n, &mut obj);
    model.set_objective(obj, 0.0)?;
    Ok(model)
}

/// Ordered-median formulation with the threshold (`t`/`v`) k-sum
/// representation.
pub fn build_m3_continuous(instance: &Instance, p: usize, bx: &LocationBox) -> Result<MilpModel> {
    let bm = check_continuous(instance, p, bx)?;
    let n = instance.n();
    let mut model = MilpModel::new(continuous_meta(Formulation::M3C, instance, p, bx));
    let PlanarVars { x, phi, .. } = add_planar_block(&mut model, instance, p, bx, &bm, true)?;
    let al = add_alpha_block(&mut model, &phi, &x, &bm)?;
    let mut obj = Vec::new();
    for j in 0..p {
        for k in 0..n {
            let t = model.add_var(format!("t_{k}_{j}"), VarKind::Continuous, 0.0, bm.close)?;
            let v: Vec<usize> = (0..n)
                .map(|i| model.add_var(format!("v_{k}_{i}_{j}"), VarKind::Continuous, 0.0, bm.close))
                .collect::<Result<_>>()?;
            for i in 0..n {
                let terms = [(t, 1.0), (v[i], 1.0), (phi[i][j], -1.0)];
                model.add_constraint(format!("ot_{k}_{i}_{j}"), terms, Sense::Ge, 0.0)?;
            }
            obj.push((t, 2.0 * (k as f64 + 1.0)));
            obj.extend(v.iter().map(|&c| (c, 2.0)));
        }
    }
    ksum_tail(&phi, &al, n, &mut obj);
    model.set_objective(obj, 0.0)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex2() -> Instance {
        Instance::from_points(vec![
            vec![8.0, 1.0],
            vec![1.0, 13.0],
            vec![17.0, 11.0],
            vec![18.0, 15.0],
            vec![11.0, 9.0],
            vec![19.0, 7.0],
        ])
        .unwrap()
    }

    #[test]
    fn box_must_contain_points() {
        let small = LocationBox::cube(2, 0.0, 10.0).unwrap();
        assert!(build_m1_continuous(&ex2(), 2, &small).is_err());
        let bx = LocationBox::cube(2, 0.0, 20.0).unwrap();
        assert!(build_m1_continuous(&ex2(), 0, &bx).is_err());
    }

    #[test]
    fn m1_shape() {
        let bx = LocationBox::cube(2, 0.0, 20.0).unwrap();
        let m = build_m1_continuous(&ex2(), 2, &bx).unwrap();
        // X: 4, w: 24, xi: 24, x: 12, phi: 12, th: 15
        assert_eq!(m.num_vars(), 91);
        assert_eq!(m.binaries().count(), 36);
        let w = m.var("w_1_0_1").unwrap();
        assert_eq!(m.variables[w].upper, 13.0);
        let phi = m.var("phi_3_1").unwrap();
        assert_eq!(m.variables[phi].upper, 33.0);
    }

    #[test]
    fn ksum_models_have_expected_rows() {
        let bx = LocationBox::cube(2, 0.0, 20.0).unwrap();
        let m2 = build_m2_continuous(&ex2(), 2, &bx).unwrap();
        assert_eq!(m2.constraints.iter().filter(|r| r.name.starts_with("ksum_")).count(), 21 * 6 * 2);
        let m3 = build_m3_continuous(&ex2(), 2, &bx).unwrap();
        assert_eq!(m3.constraints.iter().filter(|r| r.name.starts_with("ot_")).count(), 6 * 6 * 2);
        let t = m3.var("t_3_1").unwrap();
        assert_eq!(m3.objective.iter().find(|o| o.0 == t).unwrap().1, 8.0);
    }
}
