use crate::regpath::RefitModel;

use super::{argmin_total, shape_penalty, CriterionValue, SelectError, SelectionResult};

pub const DEFAULT_PLATEAU_FRACTION: f64 = 0.1;
const MIN_SLOPE_DIMENSIONS: usize = 10;
const JUMP_GRID: usize = 200;

fn shape(d: usize, p: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        shape_penalty(d, p).expect("1 ≤ D ≤ p")
    }
}

/// Lowest-rss model per dimension, by increasing dimension.
fn frontier(models: &[RefitModel]) -> Vec<usize> {
    let mut best: std::collections::BTreeMap<usize, usize> = Default::default();
    for (i, m) in models.iter().enumerate() {
        best.entry(m.dimension)
            .and_modify(|b| {
                let cur = &models[*b];
                if m.rss < cur.rss || (m.rss == cur.rss && m.support < cur.support) {
                    *b = i;
                }
            })
            .or_insert(i);
    }
    best.into_values().collect()
}

fn penalized(models: &[RefitModel], p: usize, kappa: f64, method: &str) -> SelectionResult {
    let trace: Vec<CriterionValue> = models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let pen = 2.0 * kappa * shape(m.dimension, p);
            CriterionValue {
                model_id: i,
                dimension: m.dimension,
                loss: m.rss,
                penalty: pen,
                total: m.rss + pen,
            }
        })
        .collect();
    let totals: Vec<f64> = trace.iter().map(|t| t.total).collect();
    let best = argmin_total(models, &totals).expect("nonempty");
    SelectionResult::from_model(method, &models[best], trace)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for i in 0..x.len() {
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - slope * mx, slope)
}

/// Huber M-estimate of the slope of `y` on `x` by iteratively reweighted
/// least squares with MAD scale.
pub(crate) fn huber_slope(x: &[f64], y: &[f64]) -> f64 {
    let mut w = vec![1.0; x.len()];
    let (mut a, mut b) = weighted_line(x, y, &w);
    for _ in 0..100 {
        let r: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - a - b * xi).collect();
        let mut abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
        let scale = 1.4826 * median(&mut abs);
        if !(scale > 1e-12 * y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))) {
            break;
        }
        let c = 1.345 * scale;
        for (wi, ri) in w.iter_mut().zip(&r) {
            *wi = if ri.abs() <= c { 1.0 } else { c / ri.abs() };
        }
        let (na, nb) = weighted_line(x, y, &w);
        let done = (nb - b).abs() <= 1e-12 * b.abs().max(1e-300);
        a = na;
        b = nb;
        if done {
            break;
        }
    }
    b
}

/// Slope heuristic: robust slope of rss against the shape
/// `D(2.5 + ln(p/D))` over windows of the largest dimensions; the window
/// start range where the selected model is stable gives `κ`, and the
/// selection minimizes `rss + 2κ·shape`.
pub fn slope_heuristic_select(
    models: &[RefitModel],
    p: usize,
    plateau_fraction: f64,
) -> Result<SelectionResult, SelectError> {
    if models.is_empty() {
        return Err(SelectError::EmptyCollection);
    }
    let pts = frontier(models);
    let m = pts.len();
    if m < MIN_SLOPE_DIMENSIONS {
        return Err(SelectError::TooFewDimensions {
            need: MIN_SLOPE_DIMENSIONS,
            got: m,
        });
    }
    let sh: Vec<f64> = pts.iter().map(|&i| shape(models[i].dimension, p)).collect();
    let rs: Vec<f64> = pts.iter().map(|&i| models[i].rss).collect();
    let starts = m - 2;
    let kappas: Vec<f64> = (0..starts).map(|k| -huber_slope(&sh[k..], &rs[k..])).collect();
    let chosen: Vec<Option<Vec<usize>>> = kappas
        .iter()
        .map(|&k| (k > 0.0).then(|| penalized(models, p, k, "").support))
        .collect();

    // longest run of window starts agreeing on the selected model
    let (mut best_start, mut best_len) = (0, 0);
    let mut k = 0;
    while k < starts {
        let mut e = k + 1;
        while e < starts && chosen[e] == chosen[k] {
            e += 1;
        }
        if chosen[k].is_some() && e - k > best_len {
            best_start = k;
            best_len = e - k;
        }
        k = e;
    }
    let need = (plateau_fraction * m as f64).ceil() as usize;
    let mut flags = Vec::new();
    let kappa = if best_len >= need.max(1) {
        median(&mut kappas[best_start..best_start + best_len].to_vec())
    } else {
        flags.push("no-plateau".to_string());
        kappas[0]
    };
    let mut r = if kappa > 0.0 {
        penalized(models, p, kappa, "slope")
    } else {
        flags.push("nonpositive-slope".to_string());
        penalized(models, p, 0.0, "slope")
    };
    r.flags = flags;
    Ok(r)
}

/// Dimension jump: sweep `κ` over a log grid, track the dimension of the
/// minimizer of `rss + κ·shape`, take `κ*` just past the largest drop and
/// select with `2κ*·shape`.
pub fn dimension_jump_select(models: &[RefitModel], p: usize) -> Result<SelectionResult, SelectError> {
    if models.is_empty() {
        return Err(SelectError::EmptyCollection);
    }
    let pts = frontier(models);
    if pts.len() < 2 {
        return Err(SelectError::TooFewDimensions { need: 2, got: pts.len() });
    }
    let sh: Vec<f64> = pts.iter().map(|&i| shape(models[i].dimension, p)).collect();
    let rs: Vec<f64> = pts.iter().map(|&i| models[i].rss).collect();
    let span = |v: &[f64]| {
        v.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b)) - v.iter().fold(f64::INFINITY, |a, b| a.min(*b))
    };
    let scale = span(&rs) / span(&sh);
    let mut flags = Vec::new();
    if !(scale > 0.0 && scale.is_finite()) {
        let mut r = penalized(models, p, 0.0, "djump");
        r.flags.push("degenerate-range".into());
        return Ok(r);
    }
    let (lo, hi) = ((1e-4 * scale).ln(), (1e4 * scale).ln());
    let grid: Vec<f64> = (0..JUMP_GRID)
        .map(|i| (lo + (hi - lo) * i as f64 / (JUMP_GRID - 1) as f64).exp())
        .collect();
    let dim_at = |kappa: f64| -> usize {
        (0..pts.len())
            .min_by(|&a, &b| (rs[a] + kappa * sh[a]).total_cmp(&(rs[b] + kappa * sh[b])).then(a.cmp(&b)))
            .map(|i| models[pts[i]].dimension)
            .expect("nonempty")
    };
    let dims: Vec<usize> = grid.iter().map(|&k| dim_at(k)).collect();
    let (mut jump, mut at) = (0usize, None);
    for i in 0..JUMP_GRID - 1 {
        let d = dims[i].saturating_sub(dims[i + 1]);
        if d > jump {
            jump = d;
            at = Some(i + 1);
        }
    }
    let kappa = match at {
        Some(i) => grid[i],
        None => {
            flags.push("no-jump".to_string());
            grid[JUMP_GRID / 2]
        }
    };
    let mut r = penalized(models, p, kappa, "djump");
    r.flags = flags;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelselect::testutil::model;

    fn line_collection(p: usize, c: f64, kappa0: f64) -> Vec<RefitModel> {
        (1..=30)
            .map(|d| model((0..d).collect(), c - kappa0 * shape(d, p), 150))
            .collect()
    }

    #[test]
    fn exact_line_recovers_slope() {
        let ms = line_collection(200, 1000.0, 2.5);
        let r = slope_heuristic_select(&ms, 200, 0.1).unwrap();
        assert_eq!(r.support, vec![0]);
        // κ is read back from the trace
        let t = &r.trace[0];
        let k = t.penalty / (2.0 * shape(1, 200));
        assert!((k - 2.5).abs() < 1e-6, "{k}");
    }

    #[test]
    fn constant_shift_leaves_selection() {
        let mut ms: Vec<RefitModel> = (1..=25)
            .map(|d| {
                let bend = if d <= 5 { 300.0 * (5 - d) as f64 } else { 0.0 };
                model((0..d).collect(), 900.0 - 3.0 * shape(d, 200) + bend + (d % 3) as f64, 150)
            })
            .collect();
        let a = slope_heuristic_select(&ms, 200, 0.1).unwrap();
        for m in &mut ms {
            m.rss += 77.0;
        }
        let b = slope_heuristic_select(&ms, 200, 0.1).unwrap();
        assert_eq!(a.support, b.support);
    }

    #[test]
    fn too_few_dimensions() {
        let ms: Vec<RefitModel> = (1..5).map(|d| model((0..d).collect(), 10.0 - d as f64, 50)).collect();
        assert!(matches!(
            slope_heuristic_select(&ms, 20, 0.1),
            Err(SelectError::TooFewDimensions { .. })
        ));
    }

    #[test]
    fn huber_resists_outlier() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        y[19] += 500.0;
        assert!((huber_slope(&x, &y) + 2.0).abs() < 0.05);
    }

    #[test]
    fn jump_at_engineered_crossing() {
        let p = 100;
        let (s1, s5) = (shape(1, p), shape(5, p));
        let r1 = 50.0;
        let r5 = r1 - 3.0 * (s5 - s1);
        let ms = vec![model(vec![0], r1, 100), model((0..5).collect(), r5, 100)];
        let r = dimension_jump_select(&ms, p).unwrap();
        let kappa = r.trace[0].penalty / (2.0 * s1);
        let step = (1e8f64).ln() / 199.0;
        assert!((kappa.ln() - 3f64.ln()).abs() <= step + 1e-12, "{kappa}");
        assert_eq!(r.support, vec![0]);
    }

    #[test]
    fn jump_scales_with_rss() {
        let ms: Vec<RefitModel> = (1..=20)
            .map(|d| model((0..d).collect(), 100.0 * (-(d as f64) / 3.0).exp() + 40.0 - 0.5 * d as f64, 150))
            .collect();
        let a = dimension_jump_select(&ms, 200).unwrap();
        let scaled: Vec<RefitModel> = ms
            .iter()
            .map(|m| RefitModel { rss: m.rss * 7.0, ..m.clone() })
            .collect();
        let b = dimension_jump_select(&scaled, 200).unwrap();
        assert_eq!(a.support, b.support);
        let ka = a.trace[0].penalty;
        let kb = b.trace[0].penalty;
        assert!((kb - 7.0 * ka).abs() < 1e-9 * kb);
    }
}
