//! CPLEX-style LP files.
//!
//! The writer emits `Minimize`, `Subject To`, `Bounds`, `Binaries` and
//! `End` in model order, every variable once in `Bounds` (which fixes the
//! variable order on re-reading), and numbers in shortest round-trip form.
//! A leading `\ ieflp ...` comment carries the model metadata.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Formulation, LocationBox, MilpModel, ModelMeta, Sense, VarKind};

const TERMS_PER_LINE: usize = 6;
const META_PREFIX: &str = "\\ ieflp";

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v == f64::INFINITY {
        "+inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(usize, f64)], constant: f64) {
    let mut count = 0;
    for &(j, a) in terms {
        if count > 0 && count % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(a.abs()), model.variables[j].name);
        count += 1;
    }
    if constant != 0.0 || terms.is_empty() {
        let sign = if constant < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", num(constant.abs()));
    }
}

/// Serializes `model` in LP format.
pub fn write_lp(model: &MilpModel) -> String {
    let meta = &model.meta;
    let mut out = String::new();
    let m = meta.m.map_or("-".to_string(), |m| m.to_string());
    let _ = writeln!(
        out,
        "{META_PREFIX} formulation={} n={} m={m} p={}",
        meta.formulation.tag(),
        meta.n,
        meta.p
    );
    if let Some(bx) = &meta.bounds {
        let _ = writeln!(out, "{META_PREFIX} box low={} high={}", join(&bx.low), join(&bx.high));
    }
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, model, &model.objective, model.objective_constant);
    out.push_str("\nSubject To\n");
    for row in &model.constraints {
        let _ = write!(out, " {}:", row.name);
        write_terms(&mut out, model, &row.terms, 0.0);
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(row.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper));
        }
    }
    let bins: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for b in bins {
            let _ = writeln!(out, " {b}");
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Colon,
    Sense(Sense),
}

fn tokenize(s: &str, line: usize) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        match c {
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            ':' => {
                out.push(Tok::Colon);
                i += 1;
            }
            '<' | '>' | '=' => {
                let next = chars.get(i + 1).copied();
                let (sense, width) = match (c, next) {
                    ('<', Some('=')) => (Sense::Le, 2),
                    ('<', _) => (Sense::Le, 1),
                    ('>', Some('=')) => (Sense::Ge, 2),
                    ('>', _) => (Sense::Ge, 1),
                    ('=', Some('<')) => (Sense::Le, 2),
                    ('=', Some('>')) => (Sense::Ge, 2),
                    ('=', Some('=')) => (Sense::Eq, 2),
                    _ => (Sense::Eq, 1),
                };
                i += width;
                out.push(Tok::Sense(sense));
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let st = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut k = i + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        i = k;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[st..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| Error::parse(line, format!("bad number `{text}`")))?;
                out.push(Tok::Num(v));
            }
            _ => {
                let st = i;
                while i < chars.len() && !chars[i].is_whitespace() && !"+-:<>=".contains(chars[i]) {
                    i += 1;
                }
                let text: String = chars[st..i].iter().collect();
                let lower = text.to_ascii_lowercase();
                if lower == "inf" || lower == "infinity" {
                    out.push(Tok::Num(f64::INFINITY));
                } else {
                    out.push(Tok::Ident(text));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Default)]
struct Parsed {
    order: Vec<String>,
    seen: HashSet<String>,
    bound_order: Vec<String>,
    bound_seen: HashSet<String>,
    objective: Vec<(String, f64)>,
    objective_constant: f64,
    rows: Vec<(String, Vec<(String, f64)>, Sense, f64)>,
    bounds: HashMap<String, (f64, f64)>,
    binaries: HashSet<String>,
    meta: Option<ModelMeta>,
    box_line: Option<LocationBox>,
}

impl Parsed {
    fn note(&mut self, name: &str) {
        if self.seen.insert(name.to_string()) {
            self.order.push(name.to_string());
        }
    }

    fn note_bound(&mut self, name: &str) {
        if self.bound_seen.insert(name.to_string()) {
            self.bound_order.push(name.to_string());
        }
    }

    /// Declaration order: the `Bounds` section first, then first use.
    fn variable_order(&self) -> Vec<String> {
        let mut out = self.bound_order.clone();
        out.extend(self.order.iter().filter(|n| !self.bound_seen.contains(*n)).cloned());
        out
    }
}

/// `[sign] [coef] [var]` sequence; returns terms and the constant part.
fn parse_expr(toks: &[Tok], line: usize) -> Result<(Vec<(String, f64)>, f64)> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        while let Some(t @ (Tok::Plus | Tok::Minus)) = toks.get(i) {
            if *t == Tok::Minus {
                sign = -sign;
            }
            i += 1;
        }
        let mut coef = None;
        if let Some(Tok::Num(v)) = toks.get(i) {
            coef = Some(*v);
            i += 1;
        }
        match toks.get(i) {
            Some(Tok::Ident(name)) => {
                terms.push((name.clone(), sign * coef.unwrap_or(1.0)));
                i += 1;
            }
            _ => match coef {
                Some(v) => constant += sign * v,
                None => return Err(Error::parse(line, "expected a term")),
            },
        }
    }
    Ok((terms, constant))
}

fn split_name(toks: &[Tok]) -> (Option<String>, &[Tok]) {
    match toks {
        [Tok::Ident(name), Tok::Colon, rest @ ..] => (Some(name.clone()), rest),
        _ => (None, toks),
    }
}

fn parse_bound(p: &mut Parsed, toks: &[Tok], line: usize) -> Result<()> {
    let signed = |toks: &[Tok]| -> Option<(f64, usize)> {
        match toks {
            [Tok::Minus, Tok::Num(v), ..] => Some((-v, 2)),
            [Tok::Plus, Tok::Num(v), ..] => Some((*v, 2)),
            [Tok::Num(v), ..] => Some((*v, 1)),
            _ => None,
        }
    };
    let bad = || Error::parse(line, "unrecognised bound");
    if let [Tok::Ident(name), Tok::Ident(word)] = toks {
        if word.eq_ignore_ascii_case("free") {
            p.note_bound(name);
            p.bounds.insert(name.clone(), (f64::NEG_INFINITY, f64::INFINITY));
            return Ok(());
        }
        return Err(bad());
    }
    if let Some((lo, k)) = signed(toks) {
        // lo <= x [<= hi]
        let [Tok::Sense(Sense::Le), Tok::Ident(name), rest @ ..] = &toks[k..] else {
            return Err(bad());
        };
        let entry = p.bounds.get(name).copied().unwrap_or((0.0, f64::INFINITY));
        let hi = match rest {
            [] => entry.1,
            [Tok::Sense(Sense::Le), tail @ ..] => match signed(tail) {
                Some((v, used)) if used == tail.len() => v,
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        };
        p.note_bound(name);
        p.bounds.insert(name.clone(), (lo, hi));
        return Ok(());
    }
    if let [Tok::Ident(name), Tok::Sense(sense), tail @ ..] = toks {
        let Some((v, used)) = signed(tail) else {
            return Err(bad());
        };
        if used != tail.len() {
            return Err(bad());
        }
        let entry = p.bounds.get(name).copied().unwrap_or((0.0, f64::INFINITY));
        let b = match sense {
            Sense::Le => (entry.0, v),
            Sense::Ge => (v, entry.1),
            Sense::Eq => (v, v),
        };
        p.note_bound(name);
        p.bounds.insert(name.clone(), b);
        return Ok(());
    }
    Err(bad())
}

fn parse_meta(p: &mut Parsed, text: &str, line: usize) -> Result<()> {
    let mut kv = HashMap::new();
    for part in text.split_whitespace() {
        if let Some((k, v)) = part.split_once('=') {
            kv.insert(k, v);
        }
    }
    let list = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|x| x.parse::<f64>().map_err(|_| Error::parse(line, format!("bad box value `{x}`"))))
            .collect()
    };
    if let (Some(low), Some(high)) = (kv.get("low"), kv.get("high")) {
        p.box_line = Some(LocationBox::new(list(low)?, list(high)?).map_err(|e| Error::parse(line, e.to_string()))?);
        return Ok(());
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::parse(line, format!("metadata lacks `{k}`")));
    let count = |k: &str| -> Result<usize> {
        get(k)?
            .parse()
            .map_err(|_| Error::parse(line, format!("bad metadata value for `{k}`")))
    };
    let formulation: Formulation = get("formulation")?.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?;
    let m = match get("m")? {
        "-" => None,
        _ => Some(count("m")?),
    };
    p.meta = Some(ModelMeta {
        formulation,
        n: count("n")?,
        m,
        bounds: None,
        p: count("p")?,
    });
    Ok(())
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

/// Parses LP text written by [`write_lp`] or any solver using the same
/// subset (minimization, linear rows, bounds, binaries).
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut p = Parsed::default();
    let mut section = Section::Preamble;
    // statement buffer for multi-line objective / constraints
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;

    let flush_row = |p: &mut Parsed, toks: &[Tok], line: usize| -> Result<()> {
        let (name, body) = split_name(toks);
        let k = body
            .iter()
            .position(|t| matches!(t, Tok::Sense(_)))
            .ok_or_else(|| Error::parse(line, "constraint without a relation"))?;
        let Tok::Sense(sense) = body[k] else { unreachable!() };
        let (terms, lhs_const) = parse_expr(&body[..k], line)?;
        let (rhs_terms, rhs) = parse_expr(&body[k + 1..], line)?;
        if !rhs_terms.is_empty() {
            return Err(Error::parse(line, "variables on the right-hand side"));
        }
        for (v, _) in &terms {
            p.note(v);
        }
        let name = name.unwrap_or_else(|| format!("R{}", p.rows.len()));
        p.rows.push((name, terms, sense, rhs - lhs_const));
        Ok(())
    };

    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        if let Some(rest) = raw.trim_start().strip_prefix(META_PREFIX) {
            parse_meta(&mut p, rest, line)?;
            continue;
        }
        let content = raw.split('\\').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let lower = content.to_ascii_lowercase();
        let header = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "maximize" | "maximise" | "max" => {
                return Err(Error::parse(line, "only minimization is supported"));
            }
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "generals" | "general" | "gen" => {
                return Err(Error::parse(line, "general integers are not supported"));
            }
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(next) = header {
            if section == Section::Objective {
                let (_, body) = split_name(&pending);
                let (terms, c) = parse_expr(body, pending_line)?;
                for (v, _) in &terms {
                    p.note(v);
                }
                p.objective = terms;
                p.objective_constant = c;
                pending.clear();
            }
            if section == Section::Constraints && !pending.is_empty() {
                return Err(Error::parse(pending_line, "unterminated constraint"));
            }
            section = next;
            continue;
        }
        let toks = tokenize(content, line)?;
        match section {
            Section::Preamble => return Err(Error::parse(line, "content before `Minimize`")),
            Section::End => return Err(Error::parse(line, "content after `End`")),
            Section::Objective => {
                if pending.is_empty() {
                    pending_line = line;
                }
                pending.extend(toks);
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line;
                }
                pending.extend(toks);
                // a row is complete once a relation is followed by its rhs
                if let Some(k) = pending.iter().position(|t| matches!(t, Tok::Sense(_))) {
                    if pending[k + 1..].iter().any(|t| matches!(t, Tok::Num(_))) {
                        let stmt = std::mem::take(&mut pending);
                        flush_row(&mut p, &stmt, pending_line)?;
                    }
                }
            }
            Section::Bounds => parse_bound(&mut p, &toks, line)?,
            Section::Binaries => {
                for t in toks {
                    let Tok::Ident(name) = t else {
                        return Err(Error::parse(line, "expected variable names"));
                    };
                    p.note(&name);
                    p.binaries.insert(name);
                }
            }
        }
    }
    if section != Section::End {
        return Err(Error::parse(text.lines().count(), "missing `End`"));
    }

    let mut meta = p.meta.clone().unwrap_or(ModelMeta {
        formulation: Formulation::Generic,
        n: 0,
        m: None,
        bounds: None,
        p: 0,
    });
    meta.bounds = p.box_line.clone();
    let mut model = MilpModel::new(meta);
    for name in &p.variable_order() {
        let kind = if p.binaries.contains(name) { VarKind::Binary } else { VarKind::Continuous };
        let (lo, hi) = p.bounds.get(name).copied().unwrap_or((0.0, f64::INFINITY));
        model.add_var(name.clone(), kind, lo, hi)?;
    }
    let resolve = |model: &MilpModel, terms: &[(String, f64)]| -> Vec<(usize, f64)> {
        terms
            .iter()
            .map(|(n, a)| (model.var_index(n).expect("every name was declared"), *a))
            .collect()
    };
    for (name, terms, sense, rhs) in &p.rows {
        let t = resolve(&model, terms);
        model.add_constraint(name.clone(), t, *sense, *rhs)?;
    }
    let obj = resolve(&model, &p.objective);
    model.set_objective(obj, p.objective_constant)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{CostMatrix, Instance};
    use crate::model::*;

    fn example1() -> CostMatrix {
        let pts: [f64; 6] = [1.0, 2.0, 4.0, 6.0, 10.0, 14.0];
        CostMatrix::from_fn(6, 6, |i, j| (pts[i] - pts[j]).abs()).unwrap()
    }

    #[test]
    fn empty_model_has_empty_subject_to() {
        let model = MilpModel::new(ModelMeta {
            formulation: Formulation::Generic,
            n: 0,
            m: None,
            bounds: None,
            p: 0,
        });
        let text = write_lp(&model);
        assert!(text.contains("Subject To\nBounds\nEnd\n"));
        let back = parse_lp(&text).unwrap();
        assert_eq!(back.num_vars(), 0);
        assert_eq!(write_lp(&back), text);
    }

    #[test]
    fn trivial_model_text() {
        let mut model = MilpModel::new(ModelMeta {
            formulation: Formulation::Generic,
            n: 1,
            m: None,
            bounds: None,
            p: 1,
        });
        let x = model.add_var("x", VarKind::Continuous, 0.0, 10.0).unwrap();
        let y = model.add_var("y", VarKind::Binary, 0.0, 1.0).unwrap();
        model.add_constraint("c1", [(x, 1.0), (y, -2.5)], Sense::Ge, 1.0).unwrap();
        model.set_objective([(x, 1.0)], 0.5).unwrap();
        let text = write_lp(&model);
        let expect = "\\ ieflp formulation=generic n=1 m=- p=1\n\
            Minimize\n obj: + 1 x + 0.5\n\
            Subject To\n c1: + 1 x - 2.5 y >= 1\n\
            Bounds\n 0 <= x <= 10\n 0 <= y <= 1\n\
            Binaries\n y\nEnd\n";
        assert_eq!(text, expect);
    }

    #[test]
    fn fixed_point_on_every_formulation() {
        let c = example1();
        let inst = Instance::from_points(vec![vec![8.0, 1.0], vec![1.0, 13.0], vec![17.0, 11.0], vec![18.0, 15.0]]).unwrap();
        let bx = LocationBox::cube(2, 0.0, 20.0).unwrap();
        let models = vec![
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
        ];
        for model in models {
            let text = write_lp(&model);
            let back = parse_lp(&text).unwrap();
            assert_eq!(back.meta, model.meta);
            assert_eq!(back.num_vars(), model.num_vars());
            assert_eq!(back.num_rows(), model.num_rows());
            assert_eq!(write_lp(&back), text, "{}", model.meta.formulation);
        }
    }

    #[test]
    fn reads_foreign_spellings() {
        let text = "\\ a comment\nMinimize\n cost: 2 x + 3y\nSubject To\n c: x + y\n   >= 4\n -x + y <= 10\nBounds\n x <= 8\n y >= -1\n z free\nEnd\n";
        let model = parse_lp(text).unwrap();
        assert_eq!(model.num_rows(), 2);
        assert_eq!(model.constraints[1].name, "R1");
        let y = model.var("y").unwrap();
        assert_eq!(model.variables[y].lower, -1.0);
        assert_eq!(model.variables[y].upper, f64::INFINITY);
        let z = model.var("z").unwrap();
        assert_eq!(model.variables[z].lower, f64::NEG_INFINITY);
        assert_eq!(model.constraints[1].terms, vec![(model.var("x").unwrap(), -1.0), (y, 1.0)]);
    }

    #[test]
    fn rejects_malformed_text() {
        assert!(parse_lp("Minimize\n obj: x\nSubject To\n c: x >=\nEnd\n").is_err());
        assert!(parse_lp("Maximize\n obj: x\nEnd\n").is_err());
        assert!(parse_lp("Minimize\n obj: x\n").is_err());
        assert!(parse_lp("x + y\nMinimize\nEnd\n").is_err());
    }
}
