use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::{DeviationRecord, Location, Problem, SolutionRecord};
use crate::error::{Error, Result};
use crate::eval::Measure;

/// Files written by [`emit_outputs`].
pub const OUTPUT_FILES: [&str; 8] = [
    "deviations.csv",
    "summary_by_p.csv",
    "summary_by_n.csv",
    "solutions.csv",
    "deviation_vs_p_discrete.svg",
    "deviation_vs_p_continuous.svg",
    "deviation_vs_n_discrete.svg",
    "deviation_vs_n_continuous.svg",
];

fn num(v: f64) -> String {
    // avoid "-0.000000000"
    let s = format!("{v:.9}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn to_string(wtr: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Consistency(e.to_string()))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

/// One row per record: problem, kind, d, n, p, seed, instance, native,
/// evaluated, value, best, deviation (percent).
pub fn write_deviations_csv(records: &[DeviationRecord]) -> Result<String> {
    let mut w = writer();
    w.write_record([
        "problem", "kind", "d", "n", "p", "seed", "instance", "native", "evaluated", "value", "best", "deviation",
    ])?;
    for r in records {
        let c = &r.cell;
        w.write_record([
            c.problem.as_str().to_string(),
            c.kind.to_string(),
            c.d.to_string(),
            c.n.to_string(),
            c.p.to_string(),
            c.seed.to_string(),
            c.instance_id(),
            r.native.to_string(),
            r.evaluated.to_string(),
            num(r.value),
            num(r.best),
            num(r.deviation),
        ])?;
    }
    to_string(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    P,
    N,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::P => "p",
            Axis::N => "n",
        }
    }

    fn of(self, r: &DeviationRecord) -> usize {
        match self {
            Axis::P => r.cell.p,
            Axis::N => r.cell.n,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    count: usize,
    sum: f64,
    max: f64,
}

type GroupKey = (Problem, Measure, Measure, usize);

fn group(records: &[DeviationRecord], axis: Axis) -> BTreeMap<GroupKey, Stats> {
    let mut out: BTreeMap<GroupKey, Stats> = BTreeMap::new();
    for r in records {
        let s = out.entry((r.cell.problem, r.native, r.evaluated, axis.of(r))).or_default();
        s.count += 1;
        s.sum += r.deviation;
        s.max = s.max.max(r.deviation);
    }
    out
}

/// Mean deviation per (problem, native, evaluated, p) averaged over
/// everything else.
pub(crate) fn means_by_p(records: &[DeviationRecord]) -> BTreeMap<GroupKey, (usize, f64)> {
    group(records, Axis::P)
        .into_iter()
        .map(|(k, s)| (k, (s.count, s.sum / s.count as f64)))
        .collect()
}

fn summary(records: &[DeviationRecord], axis: Axis) -> Result<String> {
    let mut w = writer();
    w.write_record(["problem", "native", "evaluated", axis.name(), "count", "mean_deviation", "max_deviation"])?;
    for ((problem, native, evaluated, x), s) in group(records, axis) {
        w.write_record([
            problem.to_string(),
            native.to_string(),
            evaluated.to_string(),
            x.to_string(),
            s.count.to_string(),
            num(s.sum / s.count as f64),
            num(s.max),
        ])?;
    }
    to_string(w)
}

/// Aggregate over the records sharing problem, measure pair and the value of
/// `by` (`"p"` or `"n"`).
pub fn write_summary_csv(records: &[DeviationRecord], by: &str) -> Result<String> {
    match by {
        "p" => summary(records, Axis::P),
        "n" => summary(records, Axis::N),
        other => Err(Error::usage(format!("cannot summarise by `{other}`"))),
    }
}

fn location_text(loc: &Location) -> String {
    match loc {
        Location::Sites(s) => s.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(" "),
        Location::Points(pts) => pts
            .iter()
            .map(|x| x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "))
            .collect::<Vec<_>>()
            .join("; "),
    }
}

/// Solutions behind the deviations. Discrete locations are 1-based site
/// numbers; continuous ones are coordinate tuples separated by `;`.
pub fn write_solutions_csv(solutions: &[SolutionRecord]) -> Result<String> {
    let mut w = writer();
    w.write_record(["problem", "kind", "d", "n", "p", "seed", "instance", "measure", "status", "objective", "location"])?;
    for s in solutions {
        let c = &s.cell;
        w.write_record([
            c.problem.to_string(),
            c.kind.to_string(),
            c.d.to_string(),
            c.n.to_string(),
            c.p.to_string(),
            c.seed.to_string(),
            c.instance_id(),
            s.measure.to_string(),
            s.provenance.as_str().to_string(),
            num(s.objective),
            location_text(&s.location),
        ])?;
    }
    to_string(w)
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn plot(records: &[DeviationRecord], problem: Problem, axis: Axis) -> Result<String> {
    let stats = group(records, axis);
    let mut series: BTreeMap<(Measure, Measure), Vec<(f64, f64)>> = BTreeMap::new();
    for ((pr, native, evaluated, x), s) in &stats {
        if *pr == problem && native != evaluated {
            series
                .entry((*native, *evaluated))
                .or_default()
                .push((*x as f64, s.sum / s.count as f64));
        }
    }
    let xs: Vec<f64> = series.values().flatten().map(|(x, _)| *x).collect();
    let (x_lo, x_hi) = match xs.iter().copied().fold(None, |acc: Option<(f64, f64)>, x| {
        Some(acc.map_or((x, x), |(a, b)| (a.min(x), b.max(x))))
    }) {
        Some((a, b)) => (a - 0.5, b + 0.5),
        None => (0.0, 1.0),
    };
    let y_hi = series.values().flatten().map(|(_, y)| *y).fold(0.0, f64::max);
    let y_hi = if y_hi > 0.0 { (y_hi * 1.1).min(105.0).max(1.0) } else { 1.0 };

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 440)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(
                format!("{problem}: mean deviation vs {}", axis.name()),
                ("sans-serif", 20),
            )
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(55)
            .build_cartesian_2d(x_lo..x_hi, 0.0..y_hi)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(axis.name())
            .y_desc("mean deviation (%)")
            .x_labels(((x_hi - x_lo).round() as usize).clamp(2, 12))
            .x_label_formatter(&|v| format!("{v:.0}"))
            .draw()
            .map_err(plot_err)?;
        for (idx, ((native, evaluated), pts)) in series.iter().enumerate() {
            let color = Palette99::pick(idx).to_rgba();
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(format!("{native} solution, {evaluated} value"))
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            chart
                .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                .map_err(plot_err)?;
        }
        if !series.is_empty() {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.85))
                .border_style(BLACK)
                .position(SeriesLabelPosition::UpperRight)
                .draw()
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Writes the four CSV tables and the four deviation plots into `outdir`
/// (created if missing) and returns their paths.
pub fn emit_outputs(records: &[DeviationRecord], solutions: &[SolutionRecord], outdir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::usage("no deviation records to write"));
    }
    fs::create_dir_all(outdir)?;
    let contents = [
        write_deviations_csv(records)?,
        summary(records, Axis::P)?,
        summary(records, Axis::N)?,
        write_solutions_csv(solutions)?,
        plot(records, Problem::Discrete, Axis::P)?,
        plot(records, Problem::Continuous, Axis::P)?,
        plot(records, Problem::Discrete, Axis::N)?,
        plot(records, Problem::Continuous, Axis::N)?,
    ];
    let mut paths = Vec::new();
    for (name, body) in OUTPUT_FILES.iter().zip(contents) {
        let path = outdir.join(name);
        fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{CellKey, Provenance};
    use crate::eval::InstanceKind;

    fn rec(p: usize, native: Measure, evaluated: Measure, dev: f64) -> DeviationRecord {
        DeviationRecord {
            cell: CellKey {
                problem: Problem::Discrete,
                kind: InstanceKind::Blobs,
                d: 2,
                n: 6,
                p,
                seed: 1,
            },
            native,
            evaluated,
            value: 10.0,
            best: 10.0 - dev / 10.0,
            deviation: dev,
        }
    }

    #[test]
    fn number_format() {
        assert_eq!(num(-0.0), "0.000000000");
        assert_eq!(num(-1e-13), "0.000000000");
        assert_eq!(num(29.411764705882), "29.411764706");
        assert_eq!(num(-2.5), "-2.500000000");
    }

    #[test]
    fn csv_layout() {
        let records = vec![
            rec(2, Measure::Median, Measure::IntraEnvy, 30.0),
            rec(3, Measure::Median, Measure::IntraEnvy, 10.0),
            rec(3, Measure::Median, Measure::IntraEnvy, 20.0),
        ];
        let dev = write_deviations_csv(&records).unwrap();
        let mut lines = dev.lines();
        assert_eq!(
            lines.next().unwrap(),
            "problem,kind,d,n,p,seed,instance,native,evaluated,value,best,deviation"
        );
        assert_eq!(
            lines.next().unwrap(),
            "discrete,blobs,2,6,2,1,blobs-d2-n6-s1,median,intraenvy,10.000000000,7.000000000,30.000000000"
        );
        let by_p = write_summary_csv(&records, "p").unwrap();
        assert_eq!(
            by_p,
            "problem,native,evaluated,p,count,mean_deviation,max_deviation\n\
             discrete,median,intraenvy,2,1,30.000000000,30.000000000\n\
             discrete,median,intraenvy,3,2,15.000000000,20.000000000\n"
        );
        assert!(write_summary_csv(&records, "q").is_err());
        let sols = vec![SolutionRecord {
            cell: records[0].cell,
            measure: Measure::Median,
            provenance: Provenance::Exact,
            objective: 11.0,
            location: Location::Sites(vec![1, 5]),
        }];
        assert!(write_solutions_csv(&sols).unwrap().ends_with("median,exact,11.000000000,2 6\n"));
    }

    #[test]
    fn emits_all_files_deterministically() {
        let records = vec![
            rec(2, Measure::Median, Measure::IntraEnvy, 30.0),
            rec(3, Measure::Envy, Measure::IntraEnvy, 12.0),
        ];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = emit_outputs(&records, &[], a.path()).unwrap();
        emit_outputs(&records, &[], b.path()).unwrap();
        assert_eq!(pa.len(), 8);
        for name in OUTPUT_FILES {
            let x = fs::read(a.path().join(name)).unwrap();
            assert!(!x.is_empty());
            assert_eq!(x, fs::read(b.path().join(name)).unwrap(), "{name}");
        }
        let svg = fs::read_to_string(a.path().join("deviation_vs_p_discrete.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(matches!(emit_outputs(&[], &[], a.path()), Err(Error::Usage(_))));
    }
}
