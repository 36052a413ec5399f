use super::continuous::{add_planar_block, check_continuous, continuous_meta, PlanarVars};
use super::discrete::{add_location_block, discrete_meta, LocationVars};
use super::{check_p, derive_big_m_discrete, Formulation, LocationBox, MilpModel, Sense, VarKind};
use crate::error::Result;
use crate::eval::{CostMatrix, Instance};

/// Classical p-median with closest-assignment rows.
pub fn build_pmedian_discrete(costs: &CostMatrix, p: usize) -> Result<MilpModel> {
    check_p(p, costs.m())?;
    let mut model = MilpModel::new(discrete_meta(Formulation::MedianD, costs, p));
    let LocationVars { x, .. } = add_location_block(&mut model, costs, p)?;
    let obj: Vec<(usize, f64)> = (0..costs.n())
        .flat_map(|i| (0..costs.m()).map(move |j| (i, j)))
        .map(|(i, j)| (x[i][j], costs.get(i, j)))
        .collect();
    model.set_objective(obj, 0.0)?;
    Ok(model)
}

/// Multi-facility ℓ1 Weber problem with closest assignment.
pub fn build_weber_continuous(instance: &Instance, p: usize, bx: &LocationBox) -> Result<MilpModel> {
    let bm = check_continuous(instance, p, bx)?;
    let mut model = MilpModel::new(continuous_meta(Formulation::MedianC, instance, p, bx));
    let PlanarVars { phi, .. } = add_planar_block(&mut model, instance, p, bx, &bm, true)?;
    let obj: Vec<(usize, f64)> = phi.iter().flatten().map(|&v| (v, 1.0)).collect();
    model.set_objective(obj, 0.0)?;
    Ok(model)
}

/// `z_i` is the cost point `i` pays; `θ_ik >= |z_i - z_k|` over all pairs.
fn add_global_envy(model: &mut MilpModel, z: &[usize], upper: f64) -> Result<()> {
    let n = z.len();
    let mut obj = Vec::new();
    for i in 0..n {
        for k in i + 1..n {
            let th = model.add_var(format!("th_{i}_{k}"), VarKind::Continuous, 0.0, upper)?;
            model.add_constraint(format!("envp_{i}_{k}"), [(th, 1.0), (z[i], -1.0), (z[k], 1.0)], Sense::Ge, 0.0)?;
            model.add_constraint(format!("envn_{i}_{k}"), [(th, 1.0), (z[i], 1.0), (z[k], -1.0)], Sense::Ge, 0.0)?;
            obj.push((th, 1.0));
        }
    }
    model.set_objective(obj, 0.0)
}

/// Global-envy location over candidate sites.
pub fn build_envy_discrete(costs: &CostMatrix, p: usize) -> Result<MilpModel> {
    check_p(p, costs.m())?;
    let (n, m) = (costs.n(), costs.m());
    let bm = derive_big_m_discrete(costs);
    let mut model = MilpModel::new(discrete_meta(Formulation::EnvyD, costs, p));
    let LocationVars { x, .. } = add_location_block(&mut model, costs, p)?;
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let hi = costs.row(i).iter().copied().fold(0.0, f64::max);
        z.push(model.add_var(format!("z_{i}"), VarKind::Continuous, 0.0, hi)?);
    }
    for i in 0..n {
        let terms = std::iter::once((z[i], 1.0)).chain((0..m).map(|j| (x[i][j], -costs.get(i, j))));
        model.add_constraint(format!("cost_{i}"), terms, Sense::Eq, 0.0)?;
    }
    add_global_envy(&mut model, &z, bm.theta)?;
    Ok(model)
}

/// Global-envy location in the box.
pub fn build_envy_continuous(instance: &Instance, p: usize, bx: &LocationBox) -> Result<MilpModel> {
    let bm = check_continuous(instance, p, bx)?;
    let n = instance.n();
    let mut model = MilpModel::new(continuous_meta(Formulation::EnvyC, instance, p, bx));
    let PlanarVars { phi, .. } = add_planar_block(&mut model, instance, p, bx, &bm, true)?;
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let hi = bx.max_distance(instance.point(i));
        z.push(model.add_var(format!("z_{i}"), VarKind::Continuous, 0.0, hi)?);
    }
    for i in 0..n {
        let terms = std::iter::once((z[i], 1.0)).chain(phi[i].iter().map(|&v| (v, -1.0)));
        model.add_constraint(format!("cost_{i}"), terms, Sense::Eq, 0.0)?;
    }
    add_global_envy(&mut model, &z, bm.theta)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_shapes() {
        let pts: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 10.0, 14.0];
        let c = CostMatrix::from_fn(6, 6, |i, j| (pts[i] - pts[j]).abs()).unwrap();
        let med = build_pmedian_discrete(&c, 2).unwrap();
        assert_eq!(med.num_vars(), 42);
        assert_eq!(med.objective.len(), 30);
        let env = build_envy_discrete(&c, 2).unwrap();
        assert_eq!(env.num_vars(), 42 + 6 + 15);
        assert_eq!(env.constraints.iter().filter(|r| r.name.starts_with("env")).count(), 30);
        assert!(build_pmedian_discrete(&c, 6).is_err());
    }
}
