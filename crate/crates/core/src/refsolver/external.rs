//! Shelling out to an LP-format solver.
//!
//! The command template must contain `{lp}` and `{sol}`; they are replaced
//! by the quoted paths of the model file and of the solution file the
//! command is expected to write. The solution file has one
//! `<varname> <value>` pair per line plus `status <word>` and
//! `objective <value>`; blank lines and `#` comments are ignored and
//! variables not listed are taken as 0.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use super::lpfile::write_lp;
use super::{SolveResult, SolveStatus};
use crate::error::{Error, Result};
use crate::model::{evaluate_model_point, MilpModel};

pub const LP_PLACEHOLDER: &str = "{lp}";
pub const SOL_PLACEHOLDER: &str = "{sol}";

/// Contents of a solver solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: HashMap<String, f64>,
}

fn shell_quote(p: &Path) -> String {
    format!("'{}'", p.display().to_string().replace('\'', "'\\''"))
}

/// Renders a solution file; variables are written in model order.
pub fn write_solution_file(model: &MilpModel, values: &[f64], objective: f64, status: SolveStatus) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status {status}");
    let _ = writeln!(out, "objective {objective}");
    for (v, x) in model.variables.iter().zip(values) {
        let _ = writeln!(out, "{} {x}", v.name);
    }
    out
}

pub fn parse_solution_file(text: &str) -> Result<SolutionFile> {
    let mut status = None;
    let mut objective = None;
    let mut values = HashMap::new();
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let (Some(key), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(line, "expected `<name> <value>`"));
        };
        match key {
            "status" => status = Some(val.parse::<SolveStatus>().map_err(|e| Error::parse(line, e.to_string()))?),
            "objective" => {
                objective = Some(
                    val.parse::<f64>()
                        .map_err(|_| Error::parse(line, format!("bad objective `{val}`")))?,
                )
            }
            _ => {
                let v = val
                    .parse::<f64>()
                    .map_err(|_| Error::parse(line, format!("bad value `{val}` for `{key}`")))?;
                if values.insert(key.to_string(), v).is_some() {
                    return Err(Error::parse(line, format!("variable `{key}` listed twice")));
                }
            }
        }
    }
    let status = status.ok_or_else(|| Error::parse(text.lines().count().max(1), "missing `status` line"))?;
    Ok(SolutionFile {
        status,
        objective,
        values,
    })
}

/// Writes `model` to `workdir`, runs the command and verifies what comes
/// back.
pub fn solve_external(model: &MilpModel, template: &str, workdir: &Path) -> Result<SolveResult> {
    if !template.contains(LP_PLACEHOLDER) || !template.contains(SOL_PLACEHOLDER) {
        return Err(Error::usage(format!(
            "solver command must contain {LP_PLACEHOLDER} and {SOL_PLACEHOLDER}"
        )));
    }
    let start = Instant::now();
    std::fs::create_dir_all(workdir)?;
    let lp_path = workdir.join("model.lp");
    let sol_path = workdir.join("model.sol");
    std::fs::write(&lp_path, write_lp(model))?;
    if sol_path.exists() {
        std::fs::remove_file(&sol_path)?;
    }
    let command = template
        .replace(LP_PLACEHOLDER, &shell_quote(&lp_path))
        .replace(SOL_PLACEHOLDER, &shell_quote(&sol_path));
    let output = Command::new("sh")
        .arg("-c")
        .arg(&command)
        .output()
        .map_err(|e| Error::Adapter(format!("cannot run `{command}`: {e}")))?;
    if !output.status.success() {
        return Err(Error::Adapter(format!(
            "`{command}` exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let text = std::fs::read_to_string(&sol_path)
        .map_err(|e| Error::Adapter(format!("solver wrote no readable solution file: {e}")))?;
    let sol = parse_solution_file(&text).map_err(|e| Error::Adapter(format!("unparsable solution file: {e}")))?;

    let mut result = SolveResult::empty();
    result.status = sol.status;
    result.wall_time = start.elapsed().as_secs_f64();
    if matches!(sol.status, SolveStatus::Infeasible | SolveStatus::Unbounded) {
        return Ok(result);
    }
    if let Some(unknown) = sol.values.keys().find(|k| model.var_index(k).is_none()) {
        return Err(Error::Verification(format!("solution names unknown variable `{unknown}`")));
    }
    let point: Vec<f64> = model
        .variables
        .iter()
        .map(|v| sol.values.get(&v.name).copied().unwrap_or(0.0))
        .collect();
    let chk = evaluate_model_point(model, &point)?;
    if !chk.feasible {
        return Err(Error::Verification(format!(
            "returned point violates the model by {:.3e}",
            chk.max_violation
        )));
    }
    if let Some(reported) = sol.objective {
        if (reported - chk.objective).abs() > 1e-6 * (1.0 + chk.objective.abs()) {
            return Err(Error::Verification(format!(
                "reported objective {reported} but the point evaluates to {}",
                chk.objective
            )));
        }
    }
    result.objective = chk.objective;
    result.incumbent = Some(point);
    if sol.status == SolveStatus::Optimal {
        result.best_bound = chk.objective;
        result.gap = 0.0;
    }
    Ok(result)
}
