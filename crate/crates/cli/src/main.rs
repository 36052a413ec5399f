use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ieflp::bench::{check_trends, emit_outputs, run_experiment, ExperimentConfig, SolverChoice};
use ieflp::cuts::EnvyCutCallback;
use ieflp::eval::{evaluate_open, facility_costs, intra_envy, measure_value};
use ieflp::gen::format::{read_instance, read_solution, write_instance, write_solution, SolutionFile};
use ieflp::gen::{cost_matrix_from_sites, generate, GenConfig};
use ieflp::model::{
    build_formulation, extract_facilities, extract_open, lift_continuous, lift_discrete, Formulation, LocationBox,
    MilpModel,
};
use ieflp::oracle::{self, solve_continuous_grid, GridConfig, GridStatus, DEFAULT_TIE_LIMIT};
use ieflp::refsolver::{branch_and_bound, solve_external, write_lp, CutCallback, CutMode, SolveStatus, SolverConfig};
use ieflp::{ContinuousSolution, CostMatrix, DiscreteSolution, Error, Instance, InstanceKind, Measure};

/// Intra-envy p-facility location: generate instances, build and solve the
/// MILP formulations, evaluate solutions and run the deviation experiment.
#[derive(Debug, Parser)]
#[command(name = "ieflp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random or clustered instance.
    Gen(GenArgs),
    /// Solve an instance.
    ///
    /// Exit status: 0 optimal, 2 limit reached or no optimality proof,
    /// 3 infeasible, 4 external solver failure, 1 any other error.
    Solve(SolveArgs),
    /// Evaluate a solution file under every measure.
    Eval(EvalArgs),
    /// Run the deviation experiment described by a key=value config file.
    Bench(BenchArgs),
    /// Write the LP file of a formulation without solving it.
    Lp(LpArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value = "random")]
    kind: InstanceKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    box_low: f64,
    #[arg(long, default_value_t = 100.0)]
    box_high: f64,
    /// Standard deviation of the blobs.
    #[arg(long, default_value_t = 1.0)]
    blob_std: f64,
    /// Number of blob centers (default: ceil(n/3)).
    #[arg(long)]
    centers: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Instance file.
    instance: PathBuf,
    /// One of m1d, m1d-strong, f1d, m3d, m1c, m2c, m3c, pmedian, weber, envy
    /// (discrete), envy-c.
    #[arg(long, short, default_value = "m1d", value_parser = parse_formulation)]
    formulation: Formulation,
    #[arg(long, short)]
    p: usize,
    /// Continuous problems: locate facilities in the bounding box of the
    /// points widened by this fraction of its width. Without it the box is
    /// [0,100]^d.
    #[arg(long)]
    inflation: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// oracle, bundled or external:<command with {lp} and {sol}>.
    #[arg(long, default_value = "bundled")]
    solver: SolverChoice,
    /// Envy cuts on f1d: off, root or tree.
    #[arg(long, default_value = "off")]
    cuts: CutMode,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Seed of the warm-start heuristics.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Grid spacing for the continuous oracle and warm start (default: a
    /// tenth of the widest box side).
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long, default_value_t = 6)]
    grid_rounds: usize,
    /// Scratch directory for external solvers.
    #[arg(long)]
    workdir: Option<PathBuf>,
    /// Solution file; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    instance: PathBuf,
    solution: PathBuf,
    /// Also print the intra-envy matrix of the stored assignment.
    #[arg(long)]
    matrix: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// key=value configuration; defaults apply to missing keys.
    config: Option<PathBuf>,
    /// Directory for the tables and plots.
    #[arg(long, short, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LpArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_formulation(s: &str) -> Result<Formulation, String> {
    match s {
        "envy" => Ok(Formulation::EnvyD),
        "generic" => Err("generic models cannot be built".into()),
        other => other.parse().map_err(|e: Error| e.to_string()),
    }
}

/// Failure carrying the process exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Adapter(_) | Error::Verification(_) => 4,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<u8, Failure>;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> CmdResult {
    let cfg = GenConfig {
        box_low: a.box_low,
        box_high: a.box_high,
        blob_std: a.blob_std,
        blob_centers: a.centers,
        ..GenConfig::new(a.kind, a.n, a.d, a.seed)
    };
    emit(a.out.as_deref(), &write_instance(&generate(&cfg)?))?;
    Ok(0)
}

struct Loaded {
    instance: Instance,
    formulation: Formulation,
    p: usize,
    bx: LocationBox,
}

fn load(a: &ModelArgs) -> Result<Loaded, Failure> {
    let instance = read_instance(&a.instance)?;
    let bx = match a.inflation {
        Some(f) => LocationBox::around(&instance, f)?,
        None => LocationBox::cube(instance.dim(), 0.0, 100.0)?,
    };
    if a.formulation.is_continuous() {
        bx.check_instance(&instance)
            .map_err(|e| Failure::from(Error::Usage(format!("{e}; pass --inflation to use the bounding box"))))?;
    }
    Ok(Loaded {
        instance,
        formulation: a.formulation,
        p: a.p,
        bx,
    })
}

fn site_costs(instance: &Instance) -> Result<CostMatrix, Failure> {
    Ok(cost_matrix_from_sites(instance, &instance.as_sites())?)
}

fn cmd_lp(a: LpArgs) -> CmdResult {
    let l = load(&a.model)?;
    let model = build_formulation(l.formulation, &l.instance, l.p, &l.bx)?;
    emit(a.out.as_deref(), &write_lp(&model))?;
    Ok(0)
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal => 0,
        SolveStatus::Feasible | SolveStatus::Limit => 2,
        SolveStatus::Infeasible | SolveStatus::Unbounded => 3,
    }
}

fn grid_config(a: &SolveArgs, bx: &LocationBox) -> GridConfig {
    let step = a.grid_step.unwrap_or_else(|| ieflp::bench::grid_step(bx, 10));
    GridConfig {
        seed: a.seed,
        ..GridConfig::new(step, a.grid_rounds)
    }
}

fn solution_from_point(l: &Loaded, model: &MilpModel, x: &[f64]) -> Result<SolutionFile, Failure> {
    let measure = l.formulation.measure();
    if l.formulation.is_continuous() {
        let facilities = extract_facilities(model, x);
        let phi = facility_costs(&l.instance, &facilities)?;
        let open: Vec<usize> = (0..facilities.len()).collect();
        let (assignment, objective) = evaluate_open(&phi, &open, measure, DEFAULT_TIE_LIMIT)?;
        Ok(SolutionFile::Continuous(ContinuousSolution {
            facilities,
            assignment,
            objective,
            measure,
        }))
    } else {
        let open = extract_open(model, x);
        let (assignment, objective) = evaluate_open(&site_costs(&l.instance)?, &open, measure, DEFAULT_TIE_LIMIT)?;
        Ok(SolutionFile::Discrete(DiscreteSolution {
            assignment,
            objective,
            measure,
        }))
    }
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let l = load(&a.model)?;
    let measure = l.formulation.measure();
    if a.cuts != CutMode::Off && l.formulation != Formulation::F1D {
        return Err(Error::Usage("cuts are only separated for f1d".into()).into());
    }

    if a.solver == SolverChoice::Oracle {
        let (sol, code, note) = if l.formulation.is_continuous() {
            let r = solve_continuous_grid(&l.instance, l.p, measure, &l.bx, &grid_config(&a, &l.bx))?;
            let note = match r.status {
                GridStatus::Exhaustive => "grid",
                GridStatus::Heuristic => "grid-multistart",
            };
            (SolutionFile::Continuous(r.solution), 2, note)
        } else {
            let sol = oracle::solve_discrete_exact(&site_costs(&l.instance)?, l.p, measure)?;
            (SolutionFile::Discrete(sol), 0, "enumeration")
        };
        eprintln!("status={} method={note} objective={}", if code == 0 { "optimal" } else { "feasible" }, sol.objective());
        emit(a.out.as_deref(), &write_solution(&sol))?;
        return Ok(code);
    }

    let model = build_formulation(l.formulation, &l.instance, l.p, &l.bx)?;
    let result = match &a.solver {
        SolverChoice::External(cmd) => {
            let workdir = a.workdir.clone().unwrap_or_else(|| std::env::temp_dir().join("ieflp-work"));
            solve_external(&model, cmd, &workdir)?
        }
        _ => {
            let warm = if l.formulation.is_continuous() {
                let r = solve_continuous_grid(&l.instance, l.p, measure, &l.bx, &grid_config(&a, &l.bx))?;
                lift_continuous(&model, &l.instance, &r.solution.facilities, &r.solution.assignment)?
            } else {
                let costs = site_costs(&l.instance)?;
                let start = oracle::swap_local_search(&costs, l.p, measure, a.seed)?;
                lift_discrete(&model, &costs, &start.assignment)?
            };
            let cfg = SolverConfig {
                time_limit: a.time_limit,
                gap_tol: a.gap,
                node_limit: a.node_limit,
                cut_mode: a.cuts,
                warm_start: Some(warm),
                ..SolverConfig::default()
            };
            let mut callback = match a.cuts {
                CutMode::Off => None,
                _ => Some(EnvyCutCallback::new(&model, &site_costs(&l.instance)?)?),
            };
            branch_and_bound(&model, &cfg, callback.as_mut().map(|c| c as &mut dyn CutCallback))?
        }
    };
    eprintln!(
        "status={} model_objective={} bound={} gap={:.3e} nodes={} lp_iterations={} cuts={} time={:.3}s",
        result.status,
        result.objective,
        result.best_bound,
        result.gap,
        result.nodes,
        result.lp_iterations,
        result.cuts_added,
        result.wall_time
    );
    if let Some(x) = &result.incumbent {
        let sol = solution_from_point(&l, &model, x)?;
        emit(a.out.as_deref(), &write_solution(&sol))?;
    }
    Ok(status_code(result.status))
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    let instance = read_instance(&a.instance)?;
    let sol = read_solution(&a.solution)?;
    let (costs, open) = match &sol {
        SolutionFile::Discrete(s) => (site_costs(&instance)?, s.assignment.open().to_vec()),
        SolutionFile::Continuous(s) => (facility_costs(&instance, &s.facilities)?, (0..s.facilities.len()).collect()),
    };
    let assignment = sol.assignment();
    if assignment.n() != instance.n() {
        return Err(Error::Usage(format!(
            "solution assigns {} points, instance has {}",
            assignment.n(),
            instance.n()
        ))
        .into());
    }
    let point_costs = assignment.costs(&costs);
    let mut out = String::new();
    out.push_str(&format!("closest={}\n", assignment.is_closest(&costs)));
    for m in [Measure::IntraEnvy, Measure::Envy, Measure::Median] {
        let stored = measure_value(m, &point_costs, assignment);
        let (_, best) = evaluate_open(&costs, &open, m, DEFAULT_TIE_LIMIT)?;
        out.push_str(&format!("{m} stored={stored} best_tie_break={best}\n"));
    }
    if a.matrix {
        out.push_str(&intra_envy(&point_costs, assignment).matrix_text());
    }
    emit(None, &out)?;
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let cfg = match &a.config {
        Some(path) => ExperimentConfig::from_kv(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let result = run_experiment(&cfg)?;
    for f in &result.failures {
        eprintln!("cell {} p={} ({}) failed: {}", f.cell.instance_id(), f.cell.p, f.cell.problem, f.message);
    }
    let files = emit_outputs(&result.records, &result.solutions, &a.out)?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    let t = check_trends(&result.records);
    println!("self deviations zero: {} (max {:.3e})", t.self_zero, t.max_self_deviation);
    println!(
        "median solutions pay intra-envy: {} (mean {:.3}%)",
        t.median_ie_positive, t.discrete_median_ie_mean
    );
    println!("discrete trend over p: {} {:?}", t.discrete_non_increasing, t.discrete_median_ie_by_p);
    println!("continuous trend over p: {} {:?}", t.continuous_non_decreasing, t.continuous_median_ie_by_p);
    println!("price of fairness nonnegative: {} (min {:.3}%)", t.fairness_nonnegative, t.min_price_of_fairness);
    Ok(if result.failures.is_empty() { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Lp(a) => cmd_lp(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
