//! End-to-end acceptance checks. Each test prints one `criterion N: PASS` or
//! `criterion N: FAIL` line on stderr (outside the test harness capture) and
//! then asserts.

use std::io::Write as _;
use std::time::{Duration, Instant};

use ieflp::bench::{check_trends, emit_outputs, run_experiment, ExperimentConfig, OUTPUT_FILES};
use ieflp::cuts::{cutting_plane_loop, EnvyCutCallback};
use ieflp::eval::{
    cluster_ie_lemma1, cluster_ie_lemma2, evaluate_open, facility_costs, intra_envy, Assignment, CostMatrix,
};
use ieflp::gen::format::{write_continuous_solution, write_discrete_solution};
use ieflp::gen::{cost_matrix_from_sites, generate, GenConfig};
use ieflp::model::{
    build_envy_continuous, build_envy_discrete, build_f1_discrete, build_m1_continuous, build_m1_discrete,
    build_m2_continuous, build_m3_continuous, build_m3_discrete, build_pmedian_discrete, build_weber_continuous,
    extract_facilities, extract_open, lift_continuous, lift_discrete, LocationBox, MilpModel,
};
use ieflp::oracle::{solve_continuous_grid, solve_discrete_exact, swap_local_search, GridConfig};
use ieflp::refsolver::{
    branch_and_bound, parse_lp, write_lp, CutCallback, CutMode, LpOptions, SolveResult, SolveStatus, SolverConfig,
};
use ieflp::model::Constraint;
use ieflp::{Instance, InstanceKind, Measure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {verdict} ({detail})");
}

const EX1: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 10.0, 14.0];

fn example1() -> CostMatrix {
    CostMatrix::from_fn(6, 6, |i, j| (EX1[i] - EX1[j]).abs()).unwrap()
}

fn example2() -> Instance {
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

/// Site index of a coordinate on the six-point line.
fn site(v: f64) -> usize {
    EX1.iter().position(|&x| x == v).unwrap()
}

fn bnb(model: &MilpModel, cfg: &SolverConfig, costs: Option<&CostMatrix>) -> SolveResult {
    match costs {
        Some(c) => {
            let mut cb = EnvyCutCallback::new(model, c).unwrap();
            branch_and_bound(model, cfg, Some(&mut cb as &mut dyn CutCallback)).unwrap()
        }
        None => branch_and_bound(model, cfg, None).unwrap(),
    }
}

#[test]
fn criterion_1_example1_intra_envy_values_and_matrices() {
    let start = Instant::now();
    let c = example1();
    // (facilities, assignment of the six points by coordinate, expected total, expected matrix)
    let cases: [(&[f64], [f64; 6], f64, [[f64; 6]; 6]); 3] = [
        (
            &[2.0, 14.0],
            [2.0, 2.0, 2.0, 2.0, 14.0, 14.0],
            17.0,
            [
                [0., 1., 0., 0., 0., 0.],
                [0., 0., 0., 0., 0., 0.],
                [1., 2., 0., 0., 0., 0.],
                [3., 4., 2., 0., 0., 0.],
                [0., 0., 0., 0., 0., 4.],
                [0., 0., 0., 0., 0., 0.],
            ],
        ),
        (
            &[4.0, 10.0],
            [4.0, 4.0, 4.0, 4.0, 10.0, 10.0],
            13.0,
            [
                [0., 1., 3., 1., 0., 0.],
                [0., 0., 2., 0., 0., 0.],
                [0., 0., 0., 0., 0., 0.],
                [0., 0., 2., 0., 0., 0.],
                [0., 0., 0., 0., 0., 0.],
                [0., 0., 0., 0., 4., 0.],
            ],
        ),
        (
            &[2.0, 10.0],
            [2.0, 2.0, 2.0, 10.0, 10.0, 10.0],
            12.0,
            [
                [0., 1., 0., 0., 0., 0.],
                [0., 0., 0., 0., 0., 0.],
                [1., 2., 0., 0., 0., 0.],
                [0., 0., 0., 0., 4., 0.],
                [0., 0., 0., 0., 0., 0.],
                [0., 0., 0., 0., 4., 0.],
            ],
        ),
    ];
    let mut ok = true;
    let mut values = Vec::new();
    for (fac, assign, total, matrix) in cases {
        let open: Vec<usize> = fac.iter().map(|&v| site(v)).collect();
        // the evaluator picks the best tie resolution on its own
        let (best, value) = evaluate_open(&c, &open, Measure::IntraEnvy, 12).unwrap();
        let assignment = Assignment::new(assign.iter().map(|&v| site(v)).collect(), open).unwrap();
        ok &= best == assignment && value == total;
        let rep = intra_envy(&assignment.costs(&c), &assignment);
        ok &= rep.total_intra_envy == total;
        ok &= rep.ie_matrix.iter().zip(matrix.iter()).all(|(a, b)| a.as_slice() == b.as_slice());
        values.push(value);
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    report(1, ok, &format!("values {values:?}, {elapsed:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_2_example1_optimization() {
    let start = Instant::now();
    let c = example1();
    let target_open = vec![site(2.0), site(10.0)];
    let mut failures = Vec::new();

    let ie = solve_discrete_exact(&c, 2, Measure::IntraEnvy).unwrap();
    if ie.objective != 12.0 || ie.assignment.open() != target_open.as_slice() {
        failures.push(format!("oracle gave {} at {:?}", ie.objective, ie.assignment.open()));
    }
    let med = solve_discrete_exact(&c, 2, Measure::Median).unwrap();
    if med.assignment.open() != [site(2.0), site(14.0)] {
        failures.push(format!("median oracle opened {:?}", med.assignment.open()));
    }
    let env = solve_discrete_exact(&c, 2, Measure::Envy).unwrap();
    if env.assignment.open() != [site(4.0), site(10.0)] {
        failures.push(format!("envy oracle opened {:?}", env.assignment.open()));
    }

    let runs: Vec<(&str, MilpModel, CutMode)> = vec![
        ("m1d", build_m1_discrete(&c, 2, false).unwrap(), CutMode::Off),
        ("f1d", build_f1_discrete(&c, 2).unwrap(), CutMode::Off),
        ("f1d+root cuts", build_f1_discrete(&c, 2).unwrap(), CutMode::Root),
        ("f1d+tree cuts", build_f1_discrete(&c, 2).unwrap(), CutMode::Tree),
        ("m3d", build_m3_discrete(&c, 2).unwrap(), CutMode::Off),
    ];
    for (name, model, cuts) in &runs {
        let cfg = SolverConfig {
            cut_mode: *cuts,
            ..SolverConfig::default()
        };
        let r = bnb(model, &cfg, (*cuts != CutMode::Off).then_some(&c));
        let open = r.incumbent.as_deref().map(|x| extract_open(model, x)).unwrap_or_default();
        if r.status != SolveStatus::Optimal || (r.objective - 12.0).abs() > 1e-6 || open != target_open {
            failures.push(format!("{name}: {} {} at {:?}", r.status, r.objective, open));
        }
    }
    // The baseline models have tied optima; the open sets above come from
    // the oracle's tie-break, the solver must reach the same values.
    for (name, model, value) in [
        ("pmedian", build_pmedian_discrete(&c, 2).unwrap(), med.objective),
        ("envy", build_envy_discrete(&c, 2).unwrap(), env.objective),
    ] {
        let r = bnb(&model, &SolverConfig::default(), None);
        if r.status != SolveStatus::Optimal || (r.objective - value).abs() > 1e-6 {
            failures.push(format!("{name}: {} {} (expected {value})", r.status, r.objective));
        }
    }
    let elapsed = start.elapsed();
    if elapsed >= Duration::from_secs(30) {
        failures.push(format!("took {elapsed:.2?}"));
    }
    let ok = failures.is_empty();
    report(2, ok, &if ok { format!("{elapsed:.2?}") } else { failures.join("; ") });
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_3_example2_continuous() {
    let inst = example2();
    let bx = LocationBox::cube(2, 0.0, 20.0).unwrap();
    let mut failures = Vec::new();
    // Facilities, the allocation shown in the published matrix (0 = first
    // facility), the expected total and the nonzero matrix entries (envier,
    // envied, amount; 0-based points).
    type Stated<'a> = (&'a [[f64; 2]; 2], [usize; 6], f64, &'a [(usize, usize, f64)]);
    let stated: [Stated; 3] = [
        (
            &[[8.0, 9.0], [18.0, 11.0]],
            [0, 0, 1, 1, 0, 1],
            24.0,
            &[(0, 4, 5.0), (1, 0, 3.0), (1, 4, 8.0), (3, 2, 3.0), (5, 2, 4.0), (5, 3, 1.0)],
        ),
        (
            &[[8.5, 15.0], [14.5, 4.0]],
            [1, 0, 1, 0, 1, 1],
            7.0,
            &[(0, 4, 1.0), (0, 5, 2.0), (2, 4, 1.0), (2, 5, 2.0), (4, 5, 1.0)],
        ),
        (&[[4.0, 6.5], [19.0, 12.5]], [0, 0, 1, 1, 0, 1], 4.0, &[(5, 2, 2.0), (5, 3, 2.0)]),
    ];
    let mut tie_optimal = Vec::new();
    for (fac, assign, expected, entries) in stated {
        let fac: Vec<Vec<f64>> = fac.iter().map(|x| x.to_vec()).collect();
        let phi = facility_costs(&inst, &fac).unwrap();
        let a = Assignment::new(assign.to_vec(), vec![0, 1]).unwrap();
        if !a.is_closest(&phi) {
            failures.push(format!("{fac:?}: published allocation is not a closest assignment"));
        }
        let rep = intra_envy(&a.costs(&phi), &a);
        if (rep.total_intra_envy - expected).abs() > 1e-6 {
            failures.push(format!("{fac:?} evaluates to {}, expected {expected}", rep.total_intra_envy));
        }
        let mut matrix = vec![vec![0.0; 6]; 6];
        for &(i, k, v) in entries {
            matrix[i][k] = v;
        }
        let worst = rep
            .ie_matrix
            .iter()
            .flatten()
            .zip(matrix.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if worst > 1e-6 {
            failures.push(format!("{fac:?}: matrix differs by {worst}"));
        }
        tie_optimal.push(evaluate_open(&phi, &[0, 1], Measure::IntraEnvy, 12).unwrap().1);
    }

    let grid = solve_continuous_grid(&inst, 2, Measure::IntraEnvy, &bx, &GridConfig::new(0.5, 6)).unwrap();
    if grid.solution.objective > 4.0 + 1e-6 {
        failures.push(format!("grid reached {}", grid.solution.objective));
    }

    let model = build_m1_continuous(&inst, 2, &bx).unwrap();
    let warm = lift_continuous(&model, &inst, &grid.solution.facilities, &grid.solution.assignment).unwrap();
    let cfg = SolverConfig {
        time_limit: Some(600.0),
        gap_tol: 1e-4,
        warm_start: Some(warm),
        ..SolverConfig::default()
    };
    let r = branch_and_bound(&model, &cfg, None).unwrap();
    let proven = r.status == SolveStatus::Optimal && r.objective <= 4.0 + 1e-6;
    if !proven {
        failures.push(format!("m1c: {} {} bound {}", r.status, r.objective, r.best_bound));
    }
    let ok = failures.is_empty();
    report(
        3,
        ok,
        &if ok {
            format!(
                "stated 24/7/4 (best tie resolution {tie_optimal:?}), grid {:.6}, m1c {:.6} bound {:.6} in {:.1}s over {} nodes",
                grid.solution.objective, r.objective, r.best_bound, r.wall_time, r.nodes
            )
        } else {
            failures.join("; ")
        },
    );
    assert!(ok, "{failures:?}");
}

fn random_assignment(rng: &mut ChaCha8Rng, n: usize) -> Assignment {
    let p = rng.random_range(1..=n);
    let assign: Vec<usize> = (0..n).map(|_| rng.random_range(0..p)).collect();
    let mut open = assign.clone();
    open.sort_unstable();
    open.dedup();
    Assignment::new(assign, open).unwrap()
}

fn lemma_totals(costs: &[f64], a: &Assignment) -> (f64, f64, f64) {
    let pairwise = intra_envy(costs, a).total_intra_envy;
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for members in a.clusters() {
        let mut sorted: Vec<f64> = members.iter().map(|&i| costs[i]).collect();
        sorted.sort_by(|x, y| y.total_cmp(x));
        l1 += cluster_ie_lemma1(&sorted).unwrap();
        let mut masked = vec![0.0; costs.len()];
        for &i in &members {
            masked[i] = costs[i];
        }
        l2 += cluster_ie_lemma2(&masked, members.len()).unwrap();
    }
    (pairwise, l1, l2)
}

#[test]
fn criterion_4_lemma_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_real: f64 = 0.0;
    let mut integer_mismatch = 0;
    for case in 0..1000 {
        let n = rng.random_range(1..=30);
        let a = random_assignment(&mut rng, n);
        let integer = case % 2 == 0;
        let costs: Vec<f64> = (0..n)
            .map(|_| {
                if integer {
                    rng.random_range(0..=60) as f64
                } else {
                    rng.random_range(0.0..100.0)
                }
            })
            .collect();
        let (pw, l1, l2) = lemma_totals(&costs, &a);
        if integer {
            if pw != l1 || pw != l2 {
                integer_mismatch += 1;
            }
        } else {
            worst_real = worst_real.max((pw - l1).abs()).max((pw - l2).abs());
        }
    }
    let ok = integer_mismatch == 0 && worst_real <= 1e-9;
    report(
        4,
        ok,
        &format!("{integer_mismatch} integer mismatches, largest real gap {worst_real:.2e}"),
    );
    assert!(ok);
}

/// The 40 instances of the equivalence suite: kind, d, n = m, p and seed.
fn equivalence_cases() -> Vec<(InstanceKind, usize, usize, usize, u64)> {
    let mut cases = Vec::new();
    for idx in 0..40u64 {
        let kind = if idx % 2 == 0 { InstanceKind::Random } else { InstanceKind::Blobs };
        let d = 2 + (idx / 2 % 2) as usize;
        let n = [6, 9, 12][(idx / 4 % 3) as usize];
        let p = 2 + (idx / 12 % 2) as usize;
        cases.push((kind, d, n, p, 5000 + idx));
    }
    cases.sort_by_key(|c| (c.2, c.3, c.4));
    cases
}

#[test]
fn criterion_5_formulation_equivalence() {
    let budget = Duration::from_secs(15 * 60);
    let start = Instant::now();
    let mut solved = 0;
    let mut mismatches = Vec::new();
    let mut unfinished = Vec::new();
    for (kind, d, n, p, seed) in equivalence_cases() {
        let inst = generate(&GenConfig::new(kind, n, d, seed)).unwrap();
        let c = cost_matrix_from_sites(&inst, &inst.as_sites()).unwrap();
        let opt = solve_discrete_exact(&c, p, Measure::IntraEnvy).unwrap().objective;
        let start_sol = swap_local_search(&c, p, Measure::IntraEnvy, seed).unwrap();
        for (name, model) in [
            ("m1d", build_m1_discrete(&c, p, false).unwrap()),
            ("f1d", build_f1_discrete(&c, p).unwrap()),
            ("m3d", build_m3_discrete(&c, p).unwrap()),
        ] {
            let tag = format!("{name} {kind}-d{d}-n{n}-p{p}-s{seed}");
            let left = budget.saturating_sub(start.elapsed());
            if left.is_zero() {
                unfinished.push(tag);
                continue;
            }
            let cfg = SolverConfig {
                time_limit: Some(left.as_secs_f64()),
                warm_start: Some(lift_discrete(&model, &c, &start_sol.assignment).unwrap()),
                ..SolverConfig::default()
            };
            let r = branch_and_bound(&model, &cfg, None).unwrap();
            if r.status != SolveStatus::Optimal {
                unfinished.push(tag);
            } else if (r.objective - opt).abs() > 1e-6 {
                mismatches.push(format!("{tag}: {} vs {opt}", r.objective));
            } else {
                solved += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatches.is_empty() && unfinished.is_empty() && elapsed < budget;
    report(
        5,
        ok,
        &format!(
            "{solved}/120 solves matched, {} mismatched, {} unfinished within the budget, {elapsed:.1?}{}",
            mismatches.len(),
            unfinished.len(),
            unfinished.first().map(|t| format!(", first unfinished: {t}")).unwrap_or_default()
        ),
    );
    assert!(mismatches.is_empty(), "{mismatches:?}");
    assert!(ok, "unfinished: {unfinished:?}");
}

/// Passes the rows of an inner callback through while keeping a copy.
struct Recording {
    inner: EnvyCutCallback,
    rows: Vec<Constraint>,
}

impl CutCallback for Recording {
    fn separate(&mut self, model: &MilpModel, x: &[f64]) -> Vec<Constraint> {
        let rows = self.inner.separate(model, x);
        self.rows.extend(rows.iter().cloned());
        rows
    }
}

#[test]
fn criterion_6_cut_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut problems = Vec::new();
    let mut cuts_checked = 0;
    for case in 0..200u64 {
        let kind = if case % 2 == 0 { InstanceKind::Random } else { InstanceKind::Blobs };
        let n = rng.random_range(3..=10);
        let d = rng.random_range(1..=3);
        let p = rng.random_range(2..n);
        let inst = generate(&GenConfig::new(kind, n, d, 6000 + case)).unwrap();
        let c = cost_matrix_from_sites(&inst, &inst.as_sites()).unwrap();
        let opt = solve_discrete_exact(&c, p, Measure::IntraEnvy).unwrap();
        let model = build_f1_discrete(&c, p).unwrap();
        let point = lift_discrete(&model, &c, &opt.assignment).unwrap();

        let (cut_model, history) = cutting_plane_loop(&model, &c, 20, LpOptions::default()).unwrap();
        let mut rows: Vec<Constraint> = cut_model.constraints[model.num_rows()..].to_vec();
        if history.windows(2).any(|w| w[1] < w[0] - 1e-9) {
            problems.push(format!("case {case}: bound history decreases {history:?}"));
        }
        if history.iter().any(|&b| b > opt.objective + 1e-6) {
            problems.push(format!("case {case}: bound {history:?} above optimum {}", opt.objective));
        }

        let mut rec = Recording {
            inner: EnvyCutCallback::new(&model, &c).unwrap(),
            rows: Vec::new(),
        };
        let cfg = SolverConfig {
            cut_mode: CutMode::Tree,
            ..SolverConfig::default()
        };
        let r = branch_and_bound(&model, &cfg, Some(&mut rec)).unwrap();
        if r.status != SolveStatus::Optimal || (r.objective - opt.objective).abs() > 1e-6 {
            problems.push(format!("case {case}: tree search gave {} {}", r.status, r.objective));
        }
        rows.extend(rec.rows);
        for row in &rows {
            cuts_checked += 1;
            let v = row.violation(&point);
            if v > 1e-6 {
                problems.push(format!("case {case}: {} violated by {v}", row.name));
            }
        }
    }
    let ok = problems.is_empty();
    report(
        6,
        ok,
        &if ok {
            format!("200 instances, {cuts_checked} cuts checked")
        } else {
            format!("{} problems, first: {}", problems.len(), problems[0])
        },
    );
    assert!(ok, "{problems:?}");
}

fn all_models() -> Vec<MilpModel> {
    let c = example1();
    let inst = example2();
    let bx = LocationBox::cube(2, 0.0, 20.0).unwrap();
    vec![
        build_m1_discrete(&c, 2, false).unwrap(),
        build_m1_discrete(&c, 2, true).unwrap(),
        build_f1_discrete(&c, 2).unwrap(),
        build_m3_discrete(&c, 2).unwrap(),
        build_pmedian_discrete(&c, 2).unwrap(),
        build_envy_discrete(&c, 2).unwrap(),
        build_m1_continuous(&inst, 2, &bx).unwrap(),
        build_m2_continuous(&inst, 2, &bx).unwrap(),
        build_m3_continuous(&inst, 2, &bx).unwrap(),
        build_weber_continuous(&inst, 2, &bx).unwrap(),
        build_envy_continuous(&inst, 2, &bx).unwrap(),
    ]
}

#[test]
fn criterion_7_lp_golden_and_round_trip() {
    let golden = include_str!("golden/example1_m1d.lp");
    let written = write_lp(&build_m1_discrete(&example1(), 2, false).unwrap());
    let mut ok = written == golden;
    let mut broken = Vec::new();
    for model in all_models() {
        let first = write_lp(&model);
        let second = parse_lp(&first).map(|m| write_lp(&m));
        if second.as_deref().ok() != Some(first.as_str()) {
            broken.push(model.meta.formulation.to_string());
        }
    }
    ok &= broken.is_empty();
    report(
        7,
        ok,
        &format!("golden match {}, round trip broken for {broken:?}", written == golden),
    );
    assert!(ok);
}

#[test]
fn criterion_8_desk_trends() {
    let start = Instant::now();
    let result = run_experiment(&ExperimentConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_outputs(&result.records, &result.solutions, dir.path()).unwrap();
    let t = check_trends(&result.records);
    let ok = result.failures.is_empty() && files.len() == OUTPUT_FILES.len() && t.all_pass();
    report(
        8,
        ok,
        &format!(
            "self {:.1e}, median intra-envy mean {:.2}%, discrete {:?}, continuous {:?}, min price of fairness {:.3}%, {} failures, {:.1?}",
            t.max_self_deviation,
            t.discrete_median_ie_mean,
            t.discrete_median_ie_by_p,
            t.continuous_median_ie_by_p,
            t.min_price_of_fairness,
            result.failures.len(),
            start.elapsed()
        ),
    );
    assert!(ok, "{t:?} {:?}", result.failures);
}

/// Every artifact kind produced from fixed seeds: bench tables and plots,
/// LP files and solution files.
fn artifacts() -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let cfg = ExperimentConfig {
        ns: vec![6, 9],
        seeds: 2,
        ..ExperimentConfig::default()
    };
    let result = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for path in emit_outputs(&result.records, &result.solutions, dir.path()).unwrap() {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        out.push((name, std::fs::read(&path).unwrap()));
    }
    for model in all_models() {
        out.push((format!("{}.lp", model.meta.formulation), write_lp(&model).into_bytes()));
    }
    let inst = generate(&GenConfig::new(InstanceKind::Blobs, 9, 2, 99)).unwrap();
    let c = cost_matrix_from_sites(&inst, &inst.as_sites()).unwrap();
    for measure in Measure::ALL {
        let sol = solve_discrete_exact(&c, 3, measure).unwrap();
        out.push((format!("oracle-{measure}.sol"), write_discrete_solution(&sol).into_bytes()));
    }
    let model = build_m1_discrete(&c, 3, false).unwrap();
    let r = branch_and_bound(&model, &SolverConfig::default(), None).unwrap();
    let open = extract_open(&model, r.incumbent.as_ref().unwrap());
    let (assignment, objective) = evaluate_open(&c, &open, Measure::IntraEnvy, 12).unwrap();
    let sol = ieflp::DiscreteSolution {
        assignment,
        objective,
        measure: Measure::IntraEnvy,
    };
    out.push(("bnb-m1d.sol".into(), write_discrete_solution(&sol).into_bytes()));
    let ex2 = example2();
    let bx = LocationBox::cube(2, 0.0, 20.0).unwrap();
    let grid = solve_continuous_grid(&ex2, 2, Measure::IntraEnvy, &bx, &GridConfig::new(1.0, 4)).unwrap();
    out.push(("grid.sol".into(), write_continuous_solution(&grid.solution).into_bytes()));
    let model = build_weber_continuous(&ex2, 2, &bx).unwrap();
    let r = branch_and_bound(&model, &SolverConfig::default(), None).unwrap();
    let fac = extract_facilities(&model, r.incumbent.as_ref().unwrap());
    out.push(("bnb-weber.txt".into(), format!("{fac:?} {}", r.objective).into_bytes()));
    out
}

#[test]
fn criterion_9_determinism() {
    let a = artifacts();
    let b = artifacts();
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let ok = a.len() == b.len() && differing.is_empty();
    report(9, ok, &format!("{} artifacts compared, differing: {differing:?}", a.len()));
    assert!(ok);
}
