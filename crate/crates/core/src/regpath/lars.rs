use nalgebra::{DMatrix, DVector};

use super::chol::GrowingCholesky;
use super::{check_dims, Algorithm, PathMeta, PenaltyKind, PenaltySpec, RegPathError, RegularizationPath, Ridge};

const TIE_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
#[derive(Default)]
pub struct LarsOptions {
    /// Defaults to `50 · min(p, n − 1)`.
    pub max_steps: Option<usize>,
    /// Fixed ridge weight `μ` for elastic-net paths; defaults to `α/2`.
    pub enet_ridge: Option<f64>,
}


impl LarsOptions {
    pub fn steps(max_steps: usize) -> Self {
        Self {
            max_steps: Some(max_steps),
            ..Self::default()
        }
    }
}

/// Exact piecewise-linear lasso homotopy with variable drops. Elastic-net
/// paths run on the ridge-augmented Gram matrix with a fixed ridge weight.
///
/// Variables tied for entry enter together and the tie is recorded.
/// Breakpoint `k` stores the `λ` of the `k`-th event, the active set right
/// after it, and the (continuous) coefficients at that `λ`.
pub fn lars_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    opts: &LarsOptions,
) -> Result<RegularizationPath, RegPathError> {
    check_dims(x, y)?;
    let (n, p) = x.shape();
    penalty.validate(p)?;
    let mu = match penalty.kind {
        PenaltyKind::Lasso => 0.0,
        PenaltyKind::ElasticNet => opts.enet_ridge.unwrap_or(penalty.alpha / 2.0),
    };
    if mu < 0.0 {
        return Err(RegPathError::InvalidOption(format!("ridge {mu} < 0")));
    }
    let max_steps = opts.max_steps.unwrap_or(50 * p.min(n.saturating_sub(1)).max(1));
    if max_steps == 0 {
        return Err(RegPathError::InvalidOption("max-steps must be ≥ 1".into()));
    }
    let limit = if mu > 0.0 { p } else { p.min(n - 1) };
    let l1f = penalty.l1_factor();
    let nf = n as f64;

    let wt: Vec<f64> = (0..p).map(|j| penalty.weight(j)).collect();
    let gram = x.tr_mul(x) / nf;
    let g = |i: usize, j: usize| -> f64 {
        let v = wt[i] * wt[j] * gram[(i, j)];
        if i == j {
            v + 2.0 * mu * wt[i] * wt[i]
        } else {
            v
        }
    };
    let xty = x.tr_mul(y) / nf;
    let c0: Vec<f64> = (0..p).map(|j| wt[j] * xty[j]).collect();

    let mut lam1 = c0.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if lam1 <= 0.0 {
        return Err(RegPathError::AllZeroCorrelation);
    }

    let mut meta = PathMeta::default();
    let mut chol = GrowingCholesky::default();
    let mut active: Vec<usize> = Vec::new();
    let mut sign: Vec<f64> = Vec::new();
    let mut is_active = vec![false; p];
    let mut excluded = vec![false; p];
    let mut bt = vec![0.0; p];

    let mut lambdas = Vec::new();
    let mut supports = Vec::new();
    let mut coefs = Vec::new();
    let mut tail = None;

    let mut record = |lam1: f64, active: &[usize], bt: &[f64]| {
        let mut s = active.to_vec();
        s.sort_unstable();
        lambdas.push(lam1 / l1f);
        supports.push(s);
        coefs.push(bt.iter().zip(&wt).map(|(b, w)| b * w).collect::<Vec<f64>>());
    };

    let corr = |bt: &[f64], active: &[usize], j: usize| -> f64 {
        c0[j] - active.iter().map(|&i| g(j, i) * bt[i]).sum::<f64>()
    };

    // first entry
    let mut pending: Vec<usize> = Vec::new();
    // A variable leaving at a breakpoint still sits at |c| = λ there.
    let mut dropped: Option<usize> = None;

    for step in 0..max_steps {
        // admit entrants; numerically tied variables come in together
        if active.len() < limit {
            for j in 0..p {
                if !is_active[j] && !excluded[j] && !pending.contains(&j) && dropped != Some(j)
                    && corr(&bt, &active, j).abs() >= lam1 * (1.0 - TIE_RTOL)
                {
                    pending.push(j);
                }
            }
        }
        pending.sort_unstable();
        if pending.len() > 1 && !meta.ties.iter().any(|t| t.0 == step) {
            meta.ties.push((step, pending.clone()));
        }
        let mut entered = false;
        for &j in &pending {
            if active.len() >= limit {
                break;
            }
            let row: Vec<f64> = active.iter().map(|&i| g(j, i)).collect();
            if chol.push(&row, g(j, j)) {
                sign.push(corr(&bt, &active, j).signum());
                active.push(j);
                is_active[j] = true;
                entered = true;
            } else {
                excluded[j] = true;
                meta.collinear.push(j);
            }
        }
        if step == 0 && !entered {
            return Err(RegPathError::AllZeroCorrelation);
        }
        record(lam1, &active, &bt);
        if step + 1 == max_steps {
            break;
        }

        let dir = chol.solve(&sign);
        // change in correlation per unit decrease of λ₁
        let a: Vec<f64> = (0..p)
            .map(|j| {
                if is_active[j] || excluded[j] {
                    0.0
                } else {
                    active.iter().zip(&dir).map(|(&i, d)| g(j, i) * d).sum()
                }
            })
            .collect();
        let eps = 1e-12 * lam1.max(f64::MIN_POSITIVE);

        let mut best_enter = f64::INFINITY;
        let mut enter_at: Vec<(f64, usize)> = Vec::new();
        if active.len() < limit {
            for j in (0..p).filter(|&j| !is_active[j] && !excluded[j]) {
                let c = corr(&bt, &active, j);
                let mut d = f64::INFINITY;
                for (num, den) in [(lam1 - c, 1.0 - a[j]), (lam1 + c, 1.0 + a[j])] {
                    if den > 1e-14 {
                        let t = num / den;
                        if t > eps && t < d {
                            d = t;
                        }
                    }
                }
                if d.is_finite() {
                    enter_at.push((d, j));
                    best_enter = best_enter.min(d);
                }
            }
        }
        let mut best_drop = f64::INFINITY;
        let mut drop_pos = None;
        for (pos, (&i, &d)) in active.iter().zip(&dir).enumerate() {
            if d != 0.0 {
                let t = -bt[i] / d;
                if t > eps && t < best_drop {
                    best_drop = t;
                    drop_pos = Some(pos);
                }
            }
        }

        let delta = best_enter.min(best_drop);
        if delta >= lam1 || !delta.is_finite() {
            // no further event before λ₁ = 0
            tail = Some(
                (0..p)
                    .map(|j| match active.iter().position(|&i| i == j) {
                        Some(pos) => dir[pos] * wt[j] * l1f,
                        None => 0.0,
                    })
                    .collect(),
            );
            break;
        }

        for (&i, d) in active.iter().zip(&dir) {
            bt[i] += delta * d;
        }
        lam1 -= delta;

        pending.clear();
        dropped = None;
        if best_drop <= best_enter {
            let pos = drop_pos.expect("drop event");
            let i = active.remove(pos);
            sign.remove(pos);
            chol.remove(pos);
            is_active[i] = false;
            bt[i] = 0.0;
            dropped = Some(i);
            meta.drops += 1;
        } else {
            pending = enter_at
                .iter()
                .filter(|(d, _)| *d <= best_enter * (1.0 + TIE_RTOL))
                .map(|&(_, j)| j)
                .collect();
        }
    }

    Ok(RegularizationPath {
        algorithm: Algorithm::Lars,
        penalty: penalty.clone(),
        ridge: Ridge::Fixed(mu),
        lambdas,
        supports,
        coefs,
        tail,
        meta,
    })
}
