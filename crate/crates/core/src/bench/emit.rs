use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{AggCell, Metric, ReferenceCell};
use super::run::{BenchReport, MetricRow};
use super::BenchError;
use crate::simgen::Design;

const REFERENCE: &str = "reference";

/// JSON Schema of `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("report.schema.json");

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Also draw per-metric boxplots as SVG.
    pub plots: bool,
}

const TABLE_HEADER: [&str; 9] = ["design", "method", "mean", "sd", "count", "best", "significant", "p_value", "flags"];

const ROW_HEADER: [&str; 15] = [
    "design",
    "method",
    "replicate",
    "mse",
    "recall",
    "specificity",
    "fdp",
    "proc-auc",
    "ppr-auc",
    "cutoff-mode",
    "cutoff",
    "pr-cutoff",
    "proc-auc-normalized",
    "ppr-auc-normalized",
    "reference-pauc",
];

#[derive(Serialize, Deserialize)]
struct TableLine {
    design: Design,
    method: String,
    mean: Option<f64>,
    sd: Option<f64>,
    count: usize,
    best: bool,
    significant: bool,
    p_value: Option<f64>,
    flags: String,
}

/// A csv writer whose header is written even when there are no rows.
fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

fn write_table(path: &Path, cells: &[AggCell], reference: Option<&[ReferenceCell]>) -> Result<(), BenchError> {
    let mut w = writer(path, &TABLE_HEADER)?;
    for c in cells {
        w.serialize(TableLine {
            design: c.design,
            method: c.method.clone(),
            mean: c.mean,
            sd: c.sd,
            count: c.count,
            best: c.best,
            significant: c.significant,
            p_value: c.p_value,
            flags: c.flags.join(";"),
        })?;
    }
    for r in reference.unwrap_or_default() {
        w.serialize(TableLine {
            design: r.design,
            method: REFERENCE.into(),
            mean: r.mean,
            sd: r.sd,
            count: r.count,
            best: false,
            significant: false,
            p_value: None,
            flags: String::new(),
        })?;
    }
    w.flush()?;
    Ok(())
}

fn write_rows(path: &Path, rows: &[MetricRow]) -> Result<(), BenchError> {
    let mut w = writer(path, &ROW_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Write `report.json`, its schema, `metrics.csv`, one `table_<metric>.csv`
/// per metric and optionally `plots/<metric>.svg` into `dir`.
pub fn emit(report: &BenchReport, dir: &Path, opts: &EmitOptions) -> Result<(), BenchError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    fs::write(dir.join("report.schema.json"), REPORT_SCHEMA)?;
    write_rows(&dir.join("metrics.csv"), &report.rows)?;
    for m in Metric::ALL {
        let cells = report.tables.get(m.label()).map(Vec::as_slice).unwrap_or_default();
        let file = format!("table_{}.csv", m.label().replace('-', "_"));
        let reference = (m == Metric::ProcAuc).then_some(report.reference.as_slice());
        write_table(&dir.join(file), cells, reference)?;
    }
    if opts.plots {
        let plots = dir.join("plots");
        fs::create_dir_all(&plots)?;
        for m in Metric::ALL {
            for d in &report.config.designs {
                boxplot(report, m, d.name, &plots.join(format!("{}_{}.svg", m.label(), d.name)))?;
            }
        }
    }
    Ok(())
}

/// Parse a `table_<metric>.csv`; reference lines come back separately.
pub fn read_table(path: &Path) -> Result<(Vec<AggCell>, Vec<ReferenceCell>), BenchError> {
    let mut cells = Vec::new();
    let mut reference = Vec::new();
    for line in csv::Reader::from_path(path)?.deserialize::<TableLine>() {
        let t = line?;
        if t.method == REFERENCE {
            reference.push(ReferenceCell {
                design: t.design,
                mean: t.mean,
                sd: t.sd,
                count: t.count,
            });
            continue;
        }
        cells.push(AggCell {
            design: t.design,
            method: t.method,
            mean: t.mean,
            sd: t.sd,
            count: t.count,
            best: t.best,
            significant: t.significant,
            p_value: t.p_value,
            flags: t.flags.split(';').filter(|f| !f.is_empty()).map(String::from).collect(),
        });
    }
    Ok((cells, reference))
}

pub fn read_report(dir: &Path) -> Result<BenchReport, BenchError> {
    let text = fs::read_to_string(dir.join("report.json"))?;
    Ok(serde_json::from_str(&text)?)
}

fn boxplot(report: &BenchReport, metric: Metric, design: Design, path: &Path) -> Result<(), BenchError> {
    let plot_err = |e: &dyn std::fmt::Display| BenchError::Plot(e.to_string());
    let methods = &report.config.methods;
    let series: Vec<(usize, Quartiles)> = methods
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let vals: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| r.design == design && &r.method == m)
                .filter_map(|r| metric.value(r))
                .collect();
            (!vals.is_empty()).then(|| (i, Quartiles::new(&vals)))
        })
        .collect();
    let (lo, hi) = series
        .iter()
        .flat_map(|(_, q)| q.values())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v as f64), b.max(v as f64)));
    let (lo, hi) = if lo.is_finite() { (lo, hi.max(lo + 1e-9)) } else { (0.0, 1.0) };
    let pad = 0.05 * (hi - lo);
    let height = 120 + 18 * methods.len() as u32;
    let root = SVGBackend::new(path, (900, height)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let labels: Vec<String> = methods.clone();
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{} / {}", metric.label(), design), ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(260)
        .build_cartesian_2d((lo - pad) as f32..(hi + pad) as f32, (0..methods.len()).into_segmented())
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .y_labels(methods.len())
        .y_label_formatter(&|v| match v {
            SegmentValue::CenterOf(i) => labels.get(*i).cloned().unwrap_or_default(),
            _ => String::new(),
        })
        .draw()
        .map_err(|e| plot_err(&e))?;
    chart
        .draw_series(
            series
                .iter()
                .map(|(i, q)| Boxplot::new_horizontal(SegmentValue::CenterOf(*i), q).width(10)),
        )
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}

fn cell_text(c: &AggCell) -> String {
    let Some(mean) = c.mean else {
        return "n/a".into();
    };
    let mut s = match c.sd {
        Some(sd) => format!("{mean:.3} ± {sd:.3}"),
        None => format!("{mean:.3}"),
    };
    if c.best {
        s = format!("**{s}**");
    } else if c.significant {
        s.push('*');
    }
    s
}

/// Markdown rendering: one table per metric, methods by designs. The best
/// cell is bold and cells significantly worse than it carry a star.
pub fn render_markdown(report: &BenchReport) -> String {
    let designs: Vec<_> = report.config.designs.iter().map(|d| d.name).collect();
    let mut out = String::new();
    for m in Metric::ALL {
        let Some(cells) = report.tables.get(m.label()) else {
            continue;
        };
        let _ = writeln!(out, "## {}\n", m.label());
        let _ = writeln!(out, "| method | {} |", designs.iter().map(|d| d.label()).collect::<Vec<_>>().join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(designs.len()));
        for method in &report.config.methods {
            let row: Vec<String> = designs
                .iter()
                .map(|d| {
                    cells
                        .iter()
                        .find(|c| c.design == *d && &c.method == method)
                        .map(cell_text)
                        .unwrap_or_else(|| "n/a".into())
                })
                .collect();
            let _ = writeln!(out, "| {method} | {} |", row.join(" | "));
        }
        if m == Metric::ProcAuc {
            let row: Vec<String> = designs
                .iter()
                .map(|d| {
                    report
                        .reference
                        .iter()
                        .find(|r| r.design == *d)
                        .and_then(|r| r.mean)
                        .map_or_else(|| "n/a".into(), |v| format!("{v:.3}"))
                })
                .collect();
            let _ = writeln!(out, "| reference | {} |", row.join(" | "));
        }
        out.push('\n');
    }
    if !report.failures.is_empty() {
        let _ = writeln!(out, "## failures\n");
        for f in &report.failures {
            let _ = writeln!(out, "- {} r{} {}: {}", f.design, f.replicate, f.method, f.error);
        }
    }
    out
}
