//! Instance and solution text files.
//!
//! Instance file:
//!
//! ```text
//! IEFLP v1
//! n=6 d=1 kind=external seed=none
//! 1
//! 2
//! ...
//! ```
//!
//! Solution file (indices are 0-based):
//!
//! ```text
//! open=1,4                        (discrete)   or one line of coordinates per facility
//! assign=0->1 1->1 2->1 3->4 4->4 5->4
//! objective=12 measure=intraenvy
//! ```
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{Assignment, ContinuousSolution, DiscreteSolution, Instance, InstanceKind, Measure};

pub const INSTANCE_HEADER: &str = "IEFLP v1";

pub fn write_instance(instance: &Instance) -> String {
    let seed = instance.seed().map_or_else(|| "none".to_string(), |s| s.to_string());
    let mut out = format!(
        "{INSTANCE_HEADER}\nn={} d={} kind={} seed={seed}\n",
        instance.n(),
        instance.dim(),
        instance.kind()
    );
    for p in instance.points() {
        out.push_str(&join_coords(p));
        out.push('\n');
    }
    out
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    match lines.next() {
        Some((_, l)) if l.trim() == INSTANCE_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected `{INSTANCE_HEADER}`"))),
    }
    let (hl, header) = lines.next().ok_or_else(|| Error::parse(2, "missing header line"))?;
    let mut n = None;
    let mut d = None;
    let mut kind = None;
    let mut seed = None;
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(hl, format!("malformed field `{field}`")))?;
        match k {
            "n" => n = Some(parse_num::<usize>(v, hl)?),
            "d" => d = Some(parse_num::<usize>(v, hl)?),
            "kind" => kind = Some(v.parse::<InstanceKind>().map_err(|e| Error::parse(hl, e.to_string()))?),
            "seed" => {
                seed = Some(if v == "none" { None } else { Some(parse_num::<u64>(v, hl)?) })
            }
            _ => return Err(Error::parse(hl, format!("unknown field `{k}`"))),
        }
    }
    let (n, d, kind, seed) = match (n, d, kind, seed) {
        (Some(n), Some(d), Some(k), Some(s)) => (n, d, k, s),
        _ => return Err(Error::parse(hl, "header needs n=, d=, kind= and seed=")),
    };
    let mut points = Vec::with_capacity(n);
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let p = parse_coords(line, ln)?;
        if p.len() != d {
            return Err(Error::parse(ln, format!("expected {d} coordinates, found {}", p.len())));
        }
        points.push(p);
    }
    if points.len() != n {
        return Err(Error::parse(hl, format!("header says n={n} but {} points follow", points.len())));
    }
    Instance::new(points, kind, seed)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

/// A parsed solution file.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionFile {
    Discrete(DiscreteSolution),
    Continuous(ContinuousSolution),
}

impl SolutionFile {
    pub fn assignment(&self) -> &Assignment {
        match self {
            SolutionFile::Discrete(s) => &s.assignment,
            SolutionFile::Continuous(s) => &s.assignment,
        }
    }

    pub fn objective(&self) -> f64 {
        match self {
            SolutionFile::Discrete(s) => s.objective,
            SolutionFile::Continuous(s) => s.objective,
        }
    }

    pub fn measure(&self) -> Measure {
        match self {
            SolutionFile::Discrete(s) => s.measure,
            SolutionFile::Continuous(s) => s.measure,
        }
    }
}

pub fn write_discrete_solution(sol: &DiscreteSolution) -> String {
    let open: Vec<String> = sol.assignment.open().iter().map(usize::to_string).collect();
    format!(
        "open={}\n{}{}",
        open.join(","),
        assign_line(&sol.assignment),
        objective_line(sol.objective, sol.measure)
    )
}

pub fn write_continuous_solution(sol: &ContinuousSolution) -> String {
    let mut out = String::new();
    for x in &sol.facilities {
        out.push_str(&join_coords(x));
        out.push('\n');
    }
    out.push_str(&assign_line(&sol.assignment));
    out.push_str(&objective_line(sol.objective, sol.measure));
    out
}

pub fn write_solution(sol: &SolutionFile) -> String {
    match sol {
        SolutionFile::Discrete(s) => write_discrete_solution(s),
        SolutionFile::Continuous(s) => write_continuous_solution(s),
    }
}

fn assign_line(a: &Assignment) -> String {
    let pairs: Vec<String> = a.assign().iter().enumerate().map(|(i, j)| format!("{i}->{j}")).collect();
    format!("assign={}\n", pairs.join(" "))
}

fn objective_line(objective: f64, measure: Measure) -> String {
    format!("objective={objective} measure={measure}\n")
}

pub fn parse_solution(text: &str) -> Result<SolutionFile> {
    let mut open: Option<Vec<usize>> = None;
    let mut facilities: Vec<Vec<f64>> = Vec::new();
    let mut assign: Option<Vec<usize>> = None;
    let mut objective = None;
    let mut measure = None;
    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("open=") {
            open = Some(
                rest.split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num::<usize>(s, ln))
                    .collect::<Result<_>>()?,
            );
        } else if let Some(rest) = line.strip_prefix("assign=") {
            let mut v = Vec::new();
            for (pos, pair) in rest.split_whitespace().enumerate() {
                let (i, j) = pair
                    .split_once("->")
                    .ok_or_else(|| Error::parse(ln, format!("malformed pair `{pair}`")))?;
                if parse_num::<usize>(i, ln)? != pos {
                    return Err(Error::parse(ln, "assign pairs must list points 0, 1, 2, ... in order"));
                }
                v.push(parse_num::<usize>(j, ln)?);
            }
            assign = Some(v);
        } else if line.starts_with("objective=") {
            for field in line.split_whitespace() {
                match field.split_once('=') {
                    Some(("objective", v)) => objective = Some(parse_num::<f64>(v, ln)?),
                    Some(("measure", v)) => {
                        measure = Some(v.parse::<Measure>().map_err(|e| Error::parse(ln, e.to_string()))?)
                    }
                    _ => return Err(Error::parse(ln, format!("malformed field `{field}`"))),
                }
            }
        } else {
            if assign.is_some() {
                return Err(Error::parse(ln, "facility coordinates must precede assign="));
            }
            facilities.push(parse_coords(line, ln)?);
        }
    }
    let assign = assign.ok_or_else(|| Error::parse(0, "missing assign= line"))?;
    let objective = objective.ok_or_else(|| Error::parse(0, "missing objective= field"))?;
    let measure = measure.ok_or_else(|| Error::parse(0, "missing measure= field"))?;
    match (open, facilities.is_empty()) {
        (Some(open), true) => Ok(SolutionFile::Discrete(DiscreteSolution {
            assignment: Assignment::new(assign, open)?,
            objective,
            measure,
        })),
        (None, false) => {
            let open = (0..facilities.len()).collect();
            Ok(SolutionFile::Continuous(ContinuousSolution {
                facilities,
                assignment: Assignment::new(assign, open)?,
                objective,
                measure,
            }))
        }
        _ => Err(Error::parse(0, "a solution has either an open= line or facility coordinates, not both")),
    }
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    parse_solution(&std::fs::read_to_string(path)?)
}

fn join_coords(p: &[f64]) -> String {
    p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ")
}

fn parse_coords(line: &str, ln: usize) -> Result<Vec<f64>> {
    line.split_whitespace().map(|t| parse_num::<f64>(t, ln)).collect()
}

fn parse_num<T: std::str::FromStr>(s: &str, ln: usize) -> Result<T> {
    s.parse::<T>().map_err(|_| Error::parse(ln, format!("invalid number `{s}`")))
}
