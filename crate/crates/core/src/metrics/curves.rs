use serde::{Deserialize, Serialize};

use super::VariableRanking;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Roc,
    Pr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffMode {
    /// x reached after each ranking's first `|truth|` variables.
    TruthSize,
    /// Largest x reached by every ranking.
    MinMaxX,
}

/// Area up to the cutoff, as is and divided by the cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialArea {
    pub raw: f64,
    pub normalized: f64,
}

impl PartialArea {
    fn new(raw: f64, cutoff: f64) -> Self {
        Self {
            raw,
            normalized: raw / cutoff,
        }
    }
}

fn truth_mask(truth: &[usize], p: usize) -> Vec<bool> {
    let mut m = vec![false; p];
    truth.iter().filter(|&&j| j < p).for_each(|&j| m[j] = true);
    m
}

/// Ranked variables in descending score order, grouped into tie blocks
/// of `(positives, negatives)`.
fn blocks(r: &VariableRanking, mask: &[bool]) -> Vec<(usize, usize)> {
    let mut ranked: Vec<(f64, usize)> = r
        .scores
        .iter()
        .enumerate()
        .filter_map(|(j, s)| s.map(|v| (v, j)))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut last = None;
    for (v, j) in ranked {
        if last != Some(v) {
            out.push((0, 0));
            last = Some(v);
        }
        let b = out.last_mut().expect("block pushed");
        if mask[j] {
            b.0 += 1;
        } else {
            b.1 += 1;
        }
    }
    out
}

fn class_sizes(mask: &[bool]) -> (usize, usize) {
    let pos = mask.iter().filter(|&&t| t).count();
    (pos, mask.len() - pos)
}

/// `(FPR, TPR)` vertices starting at the origin, one per tie block.
fn roc_points(bl: &[(usize, usize)], pos: usize, neg: usize) -> Vec<(f64, f64)> {
    let (mut tp, mut fp) = (0, 0);
    let mut pts = vec![(0.0, 0.0)];
    for &(a, b) in bl {
        tp += a;
        fp += b;
        pts.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    pts
}

fn trapezoid_until(pts: &[(f64, f64)], cutoff: f64) -> f64 {
    let mut area = 0.0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= cutoff {
            break;
        }
        if x1 > x0 {
            let xe = x1.min(cutoff);
            let ye = y0 + (y1 - y0) * (xe - x0) / (x1 - x0);
            area += (xe - x0) * (y0 + ye) / 2.0;
        }
    }
    area
}

fn check_cutoff(cutoff: f64) -> bool {
    cutoff > 0.0 && cutoff <= 1.0
}

/// Partial ROC area up to false-positive rate `cutoff`. Tied scores move
/// along a diagonal. `None` when either class is empty.
pub fn p_roc_auc(r: &VariableRanking, truth: &[usize], cutoff: f64) -> Option<PartialArea> {
    let mask = truth_mask(truth, r.len());
    let (pos, neg) = class_sizes(&mask);
    if pos == 0 || neg == 0 || !check_cutoff(cutoff) {
        return None;
    }
    let pts = roc_points(&blocks(r, &mask), pos, neg);
    Some(PartialArea::new(trapezoid_until(&pts, cutoff), cutoff))
}

/// Partial precision–recall area up to recall `cutoff`, with precision
/// held constant across each recall step.
pub fn p_pr_auc(r: &VariableRanking, truth: &[usize], cutoff: f64) -> Option<PartialArea> {
    let mask = truth_mask(truth, r.len());
    let (pos, neg) = class_sizes(&mask);
    if pos == 0 || neg == 0 || !check_cutoff(cutoff) {
        return None;
    }
    let (mut tp, mut sel) = (0, 0);
    let mut area = 0.0;
    for (a, b) in blocks(r, &mask) {
        let r0 = tp as f64 / pos as f64;
        tp += a;
        sel += a + b;
        if r0 >= cutoff {
            break;
        }
        let r1 = (tp as f64 / pos as f64).min(cutoff);
        area += (r1 - r0) * tp as f64 / sel as f64;
    }
    Some(PartialArea::new(area, cutoff))
}

/// Partial ROC area of the ranking that puts every explaining variable
/// strictly first.
pub fn reference_pauc(truth: &[usize], p: usize, cutoff: f64) -> Option<PartialArea> {
    let mask = truth_mask(truth, p);
    let ideal = VariableRanking::new(
        (0..p)
            .map(|j| Some(if mask[j] { p as f64 + 1.0 } else { -(j as f64) }))
            .collect(),
    );
    p_roc_auc(&ideal, truth, cutoff)
}

fn x_after(r: &VariableRanking, mask: &[bool], kind: CurveKind, limit: usize) -> f64 {
    let (pos, neg) = class_sizes(mask);
    let mut ranked: Vec<(f64, usize)> = r
        .scores
        .iter()
        .enumerate()
        .filter_map(|(j, s)| s.map(|v| (v, j)))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let taken = &ranked[..limit.min(ranked.len())];
    let tp = taken.iter().filter(|(_, j)| mask[*j]).count();
    match kind {
        CurveKind::Roc => (taken.len() - tp) as f64 / neg.max(1) as f64,
        CurveKind::Pr => tp as f64 / pos.max(1) as f64,
    }
}

/// Common truncation point of several rankings on the chosen axis.
pub fn common_cutoff(rankings: &[VariableRanking], truth: &[usize], kind: CurveKind, mode: CutoffMode) -> Option<f64> {
    let p = rankings.first()?.len();
    let mask = truth_mask(truth, p);
    let limit = match mode {
        CutoffMode::TruthSize => truth.len(),
        CutoffMode::MinMaxX => p,
    };
    rankings.iter().map(|r| x_after(r, &mask, kind, limit)).reduce(f64::min)
}
