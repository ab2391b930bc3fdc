use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::run::MetricRow;
use crate::numcore::{mean, sample_sd, welch_t_test, NumError};
use crate::simgen::Design;

/// Significance level of the comparison against the best method.
const LEVEL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Mse,
    Recall,
    Specificity,
    /// Mean false discovery proportion.
    Fdr,
    ProcAuc,
    PprAuc,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Mse,
        Metric::Recall,
        Metric::Specificity,
        Metric::Fdr,
        Metric::ProcAuc,
        Metric::PprAuc,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Recall => "recall",
            Metric::Specificity => "specificity",
            Metric::Fdr => "fdr",
            Metric::ProcAuc => "proc-auc",
            Metric::PprAuc => "ppr-auc",
        }
    }

    pub fn lower_is_better(self) -> bool {
        matches!(self, Metric::Mse | Metric::Fdr)
    }

    pub fn value(self, row: &MetricRow) -> Option<f64> {
        match self {
            Metric::Mse => row.mse,
            Metric::Recall => row.recall,
            Metric::Specificity => row.specificity,
            Metric::Fdr => row.fdp,
            Metric::ProcAuc => row.proc_auc,
            Metric::PprAuc => row.ppr_auc,
        }
        .filter(|v| v.is_finite())
    }
}

/// Mean of one metric for one (design, method) pair over replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AggCell {
    pub design: Design,
    pub method: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub count: usize,
    pub best: bool,
    /// Significantly worse than the best method of the design.
    pub significant: bool,
    pub p_value: Option<f64>,
    pub flags: Vec<String>,
}

/// The oracle partial ROC area per design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReferenceCell {
    pub design: Design,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub count: usize,
}

fn summarize(values: &[f64]) -> (Option<f64>, Option<f64>) {
    match values.len() {
        0 => (None, None),
        1 => (Some(values[0]), None),
        _ => (Some(mean(values)), Some(sample_sd(values))),
    }
}

fn table(rows: &[MetricRow], metric: Metric, designs: &[Design], methods: &[String]) -> Vec<AggCell> {
    let mut out = Vec::with_capacity(designs.len() * methods.len());
    for &design in designs {
        let samples: Vec<Vec<f64>> = methods
            .iter()
            .map(|m| {
                rows.iter()
                    .filter(|r| r.design == design && &r.method == m)
                    .filter_map(|r| metric.value(r))
                    .collect()
            })
            .collect();
        let better = |a: f64, b: f64| if metric.lower_is_better() { a < b } else { a > b };
        let best = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.len() >= 2)
            .map(|(i, s)| (i, mean(s)))
            .fold(None, |acc: Option<(usize, f64)>, (i, m)| match acc {
                Some((_, bm)) if !better(m, bm) => acc,
                _ => Some((i, m)),
            })
            .map(|(i, _)| i);
        for (i, (method, s)) in methods.iter().zip(&samples).enumerate() {
            let (mean, sd) = summarize(s);
            let mut flags = Vec::new();
            if s.is_empty() {
                flags.push("no-data".to_string());
            } else if s.len() < 2 {
                flags.push("single-value".to_string());
            }
            let p_value = match best {
                Some(b) if b != i && s.len() >= 2 => match welch_t_test(s, &samples[b]) {
                    Ok(t) => Some(t.p_value),
                    Err(NumError::DegenerateSample(_)) => Some(1.0),
                    Err(_) => None,
                },
                _ => None,
            };
            out.push(AggCell {
                design,
                method: method.clone(),
                mean,
                sd,
                count: s.len(),
                best: best == Some(i),
                significant: p_value.is_some_and(|p| p < LEVEL),
                p_value,
                flags,
            });
        }
    }
    out
}

/// Per-metric tables in design-then-method order, plus the oracle
/// reference row.
pub fn aggregate(
    rows: &[MetricRow],
    designs: &[Design],
    methods: &[String],
) -> (BTreeMap<String, Vec<AggCell>>, Vec<ReferenceCell>) {
    let tables = Metric::ALL
        .iter()
        .map(|&m| (m.label().to_string(), table(rows, m, designs, methods)))
        .collect();
    let reference = designs
        .iter()
        .map(|&design| {
            // One value per replicate: every row of a replicate shares it.
            let mut per_rep: BTreeMap<usize, f64> = BTreeMap::new();
            for r in rows.iter().filter(|r| r.design == design) {
                if let Some(v) = r.reference_pauc {
                    per_rep.insert(r.replicate, v);
                }
            }
            let vals: Vec<f64> = per_rep.into_values().collect();
            let (mean, sd) = summarize(&vals);
            ReferenceCell {
                design,
                mean,
                sd,
                count: vals.len(),
            }
        })
        .collect();
    (tables, reference)
}
