use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{refit_selection, IdentifyError};
use crate::modelselect::SelectionResult;
use crate::numcore::{min_eigenvalue, NumError, RngStream};
use crate::regpath::{cd_path_on_grid, geometric_grid, lambda_max, CdOptions, PenaltySpec};

#[derive(Clone, Debug, PartialEq)]
pub struct KnockoffOptions {
    /// Target false discovery rate.
    pub q: f64,
    pub grid_size: usize,
    pub eps_ratio: f64,
    pub cd: CdOptions,
}

impl Default for KnockoffOptions {
    fn default() -> Self {
        Self {
            q: 0.1,
            grid_size: 500,
            eps_ratio: 5e-4,
            cd: CdOptions::default(),
        }
    }
}

/// Second-order knockoff copy of a design.
#[derive(Clone, Debug, PartialEq)]
pub struct KnockoffDesign {
    pub xk: DMatrix<f64>,
    /// Covariance the knockoffs were built from (shrunk if needed).
    pub sigma: DMatrix<f64>,
    /// `diag(S)`.
    pub s: Vec<f64>,
    /// Shrinkage intensity toward the diagonal, if one was applied.
    pub shrinkage: Option<f64>,
}

/// Entry `λ` of every original (`z`) and knockoff (`z_tilde`) column, the
/// signed statistic `w` and the knockoff+ threshold (`None` = +∞).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct KnockoffStats {
    pub z: Vec<f64>,
    pub z_tilde: Vec<f64>,
    pub w: Vec<f64>,
    pub threshold: Option<f64>,
    pub target_fdr: f64,
}

impl KnockoffStats {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("knockoff stats serialize")
    }
}

const PD_FLOOR: f64 = 1e-8;

fn covariance(xc: &DMatrix<f64>) -> DMatrix<f64> {
    let g = xc.tr_mul(xc) / (xc.nrows() as f64 - 1.0);
    (&g + g.transpose()) * 0.5
}

/// Intensity for shrinking the sample correlation toward the identity,
/// the ratio of the summed estimated variances of the off-diagonal
/// correlations to their summed squares, clipped to `[0, 1]`.
fn correlation_shrinkage(xc: &DMatrix<f64>) -> f64 {
    let (n, p) = xc.shape();
    let nf = n as f64;
    let mut xs = xc.clone();
    for j in 0..p {
        let sd = (xs.column(j).norm_squared() / (nf - 1.0)).sqrt();
        if sd > 0.0 {
            xs.column_mut(j).scale_mut(1.0 / sd);
        }
    }
    let (mut var_sum, mut sq_sum) = (0.0, 0.0);
    for i in 0..p {
        for j in (i + 1)..p {
            let w: Vec<f64> = xs.column(i).iter().zip(xs.column(j).iter()).map(|(a, b)| a * b).collect();
            let wbar = w.iter().sum::<f64>() / nf;
            let r = nf / (nf - 1.0) * wbar;
            var_sum += nf / (nf - 1.0).powi(3) * w.iter().map(|v| (v - wbar).powi(2)).sum::<f64>();
            sq_sum += r * r;
        }
    }
    if sq_sum == 0.0 {
        0.0
    } else {
        (var_sum / sq_sum).clamp(0.0, 1.0)
    }
}

fn shrink(sigma: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut out = sigma * (1.0 - lambda);
    for j in 0..sigma.nrows() {
        out[(j, j)] = sigma[(j, j)];
    }
    out
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Gaussian second-order knockoffs with the equicorrelated choice of `S`.
/// A singular sample covariance is shrunk toward its diagonal first.
pub fn knockoff_construct(x: &DMatrix<f64>, rng: &mut RngStream) -> Result<KnockoffDesign, IdentifyError> {
    let (n, p) = x.shape();
    if n < 3 || p == 0 {
        return Err(IdentifyError::InvalidOption(format!("knockoffs need n ≥ 3 and p ≥ 1, got {n}x{p}")));
    }
    let mu: Vec<f64> = (0..p).map(|j| x.column(j).mean()).collect();
    let mut xc = x.clone();
    for (mut col, m) in xc.column_iter_mut().zip(&mu) {
        col.add_scalar_mut(-m);
    }
    let raw = covariance(&xc);
    if (0..p).any(|j| !(raw[(j, j)] > 0.0)) {
        return Err(NumError::DegenerateSample("constant column".into()).into());
    }
    let mut shrinkage = None;
    let mut sigma = raw.clone();
    let scale = |m: &DMatrix<f64>| -> Result<f64, NumError> {
        let d = DMatrix::from_fn(p, p, |i, j| m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt());
        min_eigenvalue(&d)
    };
    if scale(&sigma)? <= PD_FLOOR {
        let mut lam = correlation_shrinkage(&xc).max(1e-3);
        loop {
            sigma = shrink(&raw, lam);
            if scale(&sigma)? > PD_FLOOR || lam >= 1.0 {
                break;
            }
            lam = (2.0 * lam).min(1.0);
        }
        shrinkage = Some(lam);
    }
    let s_corr = (2.0 * scale(&sigma)?).min(1.0);
    let s: Vec<f64> = (0..p).map(|j| s_corr * sigma[(j, j)]).collect();
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| NumError::DomainError("covariance not positive definite after shrinkage".into()))?;
    let sdiag = DMatrix::from_diagonal(&DVector::from_column_slice(&s));
    // A = Σ⁻¹ S
    let a = chol.solve(&sdiag);
    let v = &sdiag * 2.0 - &sdiag * &a;
    let root = psd_sqrt(&v);
    let z: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng));
    let mut xk = &xc - &xc * &a + z * root;
    for (mut col, m) in xk.column_iter_mut().zip(&mu) {
        col.add_scalar_mut(*m);
    }
    Ok(KnockoffDesign {
        xk,
        sigma,
        s,
        shrinkage,
    })
}

/// Entry `λ` of each column of `aug` on a coordinate-descent grid; 0 if
/// it never enters.
pub(crate) fn entry_lambdas(
    aug: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    opts: &KnockoffOptions,
) -> Result<Vec<f64>, IdentifyError> {
    let grid = geometric_grid(lambda_max(aug, y, penalty)?, opts.eps_ratio, opts.grid_size);
    let path = cd_path_on_grid(aug, y, penalty, &grid, &opts.cd)?;
    Ok((0..aug.ncols())
        .map(|j| {
            path.coefs
                .iter()
                .position(|b| b[j] != 0.0)
                .map_or(0.0, |k| path.lambdas[k])
        })
        .collect())
}

pub(crate) fn signed_max(z: &[f64], zt: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(zt)
        .map(|(&a, &b)| {
            if a > b {
                a
            } else if b > a {
                -b
            } else {
                0.0
            }
        })
        .collect()
}

/// Knockoff+ threshold: the smallest nonzero `|Wⱼ|` whose estimated false
/// discovery proportion is at most `q`.
pub(crate) fn knockoff_threshold(w: &[f64], q: f64) -> Option<f64> {
    let mut cands: Vec<f64> = w.iter().filter(|v| **v != 0.0).map(|v| v.abs()).collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    cands.into_iter().find(|&t| {
        let neg = w.iter().filter(|&&v| v <= -t).count();
        let pos = w.iter().filter(|&&v| v >= t).count();
        (1 + neg) as f64 / pos.max(1) as f64 <= q
    })
}

/// Knockoff filter on a path over `[X X̃]`; selected columns are refitted
/// by OLS on `x`.
pub fn knockoff_filter(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    opts: &KnockoffOptions,
    rng: &mut RngStream,
) -> Result<(SelectionResult, KnockoffStats), IdentifyError> {
    if !(opts.q > 0.0 && opts.q < 1.0) {
        return Err(IdentifyError::InvalidOption(format!("target fdr {}", opts.q)));
    }
    let (n, p) = x.shape();
    penalty.validate(p)?;
    let ko = knockoff_construct(x, rng)?;
    let mut xk = ko.xk;
    for j in 0..p {
        let m = xk.column(j).mean();
        xk.column_mut(j).add_scalar_mut(-m);
    }
    let mut aug = DMatrix::zeros(n, 2 * p);
    aug.columns_mut(0, p).copy_from(x);
    aug.columns_mut(p, p).copy_from(&xk);
    let aug_pen = PenaltySpec {
        weights: penalty.weights.as_ref().map(|w| w.iter().chain(w).copied().collect()),
        ..penalty.clone()
    };
    let entry = entry_lambdas(&aug, y, &aug_pen, opts)?;
    let (z, zt) = entry.split_at(p);
    let w = signed_max(z, zt);
    let threshold = knockoff_threshold(&w, opts.q);
    let support: Vec<usize> = match threshold {
        Some(t) => (0..p).filter(|&j| w[j] >= t).collect(),
        None => Vec::new(),
    };
    let mut sel = refit_selection(&format!("knockoff-{}", penalty.kind.label()), &support, x, y)?;
    if ko.shrinkage.is_some() {
        sel.flags.push("covariance-shrunk".into());
    }
    Ok((
        sel,
        KnockoffStats {
            z: z.to_vec(),
            z_tilde: zt.to_vec(),
            w,
            threshold,
            target_fdr: opts.q,
        },
    ))
}
