use ieflp::bench::deviation;
use ieflp::cuts::Separator;
use ieflp::eval::{closest_assignments, evaluate_open, measure_value, CostMatrix, Instance, InstanceKind, Measure};
use ieflp::gen::format::{parse_instance, write_instance};
use ieflp::gen::{cost_matrix_from_sites, generate, GenConfig};
use ieflp::model::{
    build_envy_discrete, build_f1_discrete, build_m1_continuous, build_m1_discrete, build_m3_discrete,
    build_pmedian_discrete, evaluate_model_point, lift_continuous, lift_discrete, LocationBox,
};
use ieflp::oracle::{refine_facilities, solve_discrete_exact};
use ieflp::refsolver::{branch_and_bound, parse_lp, write_lp, SolveStatus, SolverConfig};
use proptest::prelude::*;

/// Points on a small integer lattice, so that ties are common.
fn lattice_points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=2, 4usize..=7).prop_flat_map(|(d, n)| {
        prop::collection::vec(prop::collection::vec((0u8..8).prop_map(f64::from), d), n)
    })
}

fn real_points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=3, 4usize..=7)
        .prop_flat_map(|(d, n)| prop::collection::vec(prop::collection::vec(0.0f64..100.0, d), n))
}

fn costs_of(points: &[Vec<f64>]) -> CostMatrix {
    let inst = Instance::from_points(points.to_vec()).unwrap();
    cost_matrix_from_sites(&inst, &inst.as_sites()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evaluator_picks_the_best_closest_assignment(points in lattice_points(), seed in 0usize..100) {
        let c = costs_of(&points);
        let p = 1 + seed % (c.m() - 1);
        let open: Vec<usize> = (0..p).map(|t| (seed + 3 * t) % c.m()).collect();
        for measure in Measure::ALL {
            let (best, value) = evaluate_open(&c, &open, measure, 12).unwrap();
            prop_assert!(best.is_closest(&c));
            for a in closest_assignments(&c, &open, 12).unwrap() {
                prop_assert!(a.is_closest(&c));
                prop_assert!(value <= measure_value(measure, &a.costs(&c), &a) + 1e-9);
            }
        }
    }

    #[test]
    fn lifted_oracle_optimum_is_feasible(points in lattice_points(), p_pick in 0usize..10) {
        let c = costs_of(&points);
        let p = 2 + p_pick % (c.m() - 2);
        let opt = solve_discrete_exact(&c, p, Measure::IntraEnvy).unwrap();
        for model in [
            build_m1_discrete(&c, p, false).unwrap(),
            build_m1_discrete(&c, p, true).unwrap(),
            build_m3_discrete(&c, p).unwrap(),
        ] {
            let chk = evaluate_model_point(&model, &lift_discrete(&model, &c, &opt.assignment).unwrap()).unwrap();
            prop_assert!(chk.feasible, "{}", model.meta.formulation);
            prop_assert!((chk.objective - opt.objective).abs() < 1e-9, "{}", model.meta.formulation);
        }
        // the location-only model may charge tied points twice, never less
        let f1 = build_f1_discrete(&c, p).unwrap();
        let chk = evaluate_model_point(&f1, &lift_discrete(&f1, &c, &opt.assignment).unwrap()).unwrap();
        prop_assert!(chk.feasible);
        prop_assert!(chk.objective >= opt.objective - 1e-9);
    }

    #[test]
    fn lp_text_round_trips(points in real_points(), p_pick in 0usize..10) {
        let c = costs_of(&points);
        let p = 2 + p_pick % (c.m() - 2);
        for model in [
            build_m1_discrete(&c, p, true).unwrap(),
            build_f1_discrete(&c, p).unwrap(),
            build_m3_discrete(&c, p).unwrap(),
            build_pmedian_discrete(&c, p).unwrap(),
            build_envy_discrete(&c, p).unwrap(),
        ] {
            let text = write_lp(&model);
            let back = parse_lp(&text).unwrap();
            prop_assert_eq!(&write_lp(&back), &text);
            prop_assert_eq!(back.num_vars(), model.num_vars());
            prop_assert_eq!(back.num_rows(), model.num_rows());
        }
    }

    #[test]
    fn cuts_hold_at_the_lifted_optimum(points in real_points(), p_pick in 0usize..10, frac in 0.0f64..1.0) {
        let c = costs_of(&points);
        let p = 2 + p_pick % (c.m() - 2);
        let opt = solve_discrete_exact(&c, p, Measure::IntraEnvy).unwrap();
        let sep = Separator::new(&c);
        let n = c.n();
        let mut y = vec![0.0; c.m()];
        for &j in opt.assignment.open() {
            y[j] = 1.0;
        }
        let costs = opt.assignment.costs(&c);
        let assign = opt.assignment.assign();
        // pairwise envies of the optimum, scaled down to invite violations
        let theta: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|k| {
                if assign[i] == assign[k] { frac * (costs[i] - costs[k]).abs() } else { 0.0 }
            }).collect())
            .collect();
        for cut in sep.separate(&y, &theta).unwrap() {
            let (i, k) = cut.pair;
            let full = if assign[i] == assign[k] { (costs[i] - costs[k]).abs() } else { 0.0 };
            prop_assert!(cut.rhs(&y) <= full + 1e-9, "pair {:?}: rhs {} above envy {}", cut.pair, cut.rhs(&y), full);
        }
    }

    #[test]
    fn deviation_is_a_percentage(best in 0.0f64..1e4, extra in 0.0f64..1e4) {
        let d = deviation(best + extra, best).unwrap();
        prop_assert!((0.0..=100.0).contains(&d));
        prop_assert_eq!(deviation(best, best).unwrap(), 0.0);
    }

    #[test]
    fn instance_files_round_trip(n in 1usize..15, d in 1usize..4, seed in any::<u64>(), blobs in any::<bool>()) {
        let kind = if blobs { InstanceKind::Blobs } else { InstanceKind::Random };
        let inst = generate(&GenConfig::new(kind, n, d, seed)).unwrap();
        prop_assert_eq!(&inst, &generate(&GenConfig::new(kind, n, d, seed)).unwrap());
        prop_assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bundled_solver_matches_enumeration(points in lattice_points(), p_pick in 0usize..10) {
        let c = costs_of(&points);
        let p = 2 + p_pick % (c.m() - 2);
        for measure in Measure::ALL {
            let opt = solve_discrete_exact(&c, p, measure).unwrap();
            let model = match measure {
                Measure::IntraEnvy => build_m1_discrete(&c, p, false).unwrap(),
                Measure::Median => build_pmedian_discrete(&c, p).unwrap(),
                Measure::Envy => build_envy_discrete(&c, p).unwrap(),
            };
            let r = branch_and_bound(&model, &SolverConfig::default(), None).unwrap();
            prop_assert_eq!(r.status, SolveStatus::Optimal);
            prop_assert!((r.objective - opt.objective).abs() < 1e-6, "{}: {} vs {}", measure, r.objective, opt.objective);
            prop_assert!(r.best_bound <= r.objective + 1e-9);
        }
    }

    #[test]
    fn refinement_never_worsens(points in real_points(), fx in 0.0f64..1.0, fy in 0.0f64..1.0) {
        let inst = Instance::from_points(points).unwrap();
        let bx = LocationBox::around(&inst, 0.0).unwrap();
        let start: Vec<Vec<f64>> = [fx, fy]
            .iter()
            .map(|&f| (0..inst.dim()).map(|l| bx.low[l] + f * (bx.high[l] - bx.low[l])).collect())
            .collect();
        let phi = ieflp::eval::facility_costs(&inst, &start).unwrap();
        let (_, before) = evaluate_open(&phi, &[0, 1], Measure::IntraEnvy, 12).unwrap();
        let after = refine_facilities(&inst, Measure::IntraEnvy, &bx, &start, 5.0, 4).unwrap();
        prop_assert!(after.objective <= before + 1e-9);
        prop_assert!(after.facilities.iter().all(|x| bx.contains(x)));
        // the refined point is feasible in the continuous model with the same value
        let model = build_m1_continuous(&inst, 2, &bx).unwrap();
        let chk = evaluate_model_point(&model, &lift_continuous(&model, &inst, &after.facilities, &after.assignment).unwrap()).unwrap();
        prop_assert!(chk.feasible, "violation {}", chk.max_violation);
        prop_assert!((chk.objective - after.objective).abs() < 1e-6);
    }
}
