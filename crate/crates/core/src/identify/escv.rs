use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use super::{refit_selection, IdentifyError};
use crate::modelselect::SelectionResult;
use crate::numcore::RngStream;
use crate::par::map_indexed;
use crate::regpath::{cd_path_on_grid, geometric_grid, lambda_max, CdOptions, PenaltySpec};

#[derive(Clone, Debug, PartialEq)]
pub struct EscvOptions {
    pub folds: usize,
    pub grid_size: usize,
    pub eps_ratio: f64,
    pub cd: CdOptions,
}

impl Default for EscvOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            grid_size: 100,
            eps_ratio: 1e-3,
            cd: CdOptions::default(),
        }
    }
}

/// Per-`λ` diagnostics of one ESCV run.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct EscvCurve {
    pub lambdas: Vec<f64>,
    pub es: Vec<f64>,
    pub cv: Vec<f64>,
}

/// Estimation stability of fitted values `fits[k][g]` (fold `k`, grid
/// point `g`): mean squared deviation from the fold average over the
/// squared norm of that average. Infinite where the average fit is zero.
pub(crate) fn estimation_stability(fits: &[Vec<DVector<f64>>], g: usize) -> f64 {
    let k = fits.len() as f64;
    let mean = fits.iter().fold(DVector::zeros(fits[0][g].len()), |acc, f| acc + &f[g]) / k;
    let denom = mean.norm_squared();
    if denom == 0.0 {
        return f64::INFINITY;
    }
    let num = fits.iter().map(|f| (&f[g] - &mean).norm_squared()).sum::<f64>() / k;
    num / denom
}

/// Largest-`λ` minimizer of ES among grid points no smaller than the
/// cross-validation choice.
pub(crate) fn choose(curve: &EscvCurve) -> Option<usize> {
    let cv_idx = (0..curve.cv.len()).min_by(|&a, &b| curve.cv[a].total_cmp(&curve.cv[b]).then(a.cmp(&b)))?;
    (0..=cv_idx)
        .filter(|&g| curve.es[g].is_finite())
        .min_by(|&a, &b| curve.es[a].total_cmp(&curve.es[b]).then(a.cmp(&b)))
}

pub(crate) fn escv_curve(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    opts: &EscvOptions,
    folds: &[usize],
) -> Result<(EscvCurve, crate::regpath::RegularizationPath), IdentifyError> {
    let (n, p) = x.shape();
    let grid = geometric_grid(lambda_max(x, y, penalty)?, opts.eps_ratio, opts.grid_size);
    let full = cd_path_on_grid(x, y, penalty, &grid, &opts.cd)?;
    let k = opts.folds;
    // Per fold: fitted values on all rows and held-out squared errors.
    let per_fold = map_indexed(k, |f| -> Result<(Vec<DVector<f64>>, Vec<f64>), IdentifyError> {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        let mut xt = x.select_rows(train.iter());
        let mut yt = DVector::from_iterator(train.len(), train.iter().map(|&i| y[i]));
        let xbar: Vec<f64> = (0..p).map(|j| xt.column(j).mean()).collect();
        let ybar = yt.mean();
        for (mut col, m) in xt.column_iter_mut().zip(&xbar) {
            col.add_scalar_mut(-m);
        }
        yt.add_scalar_mut(-ybar);
        let path = cd_path_on_grid(&xt, &yt, penalty, &grid, &opts.cd)?;
        let mut fits = Vec::with_capacity(path.len());
        let mut errs = Vec::with_capacity(path.len());
        for beta in &path.coefs {
            let b = DVector::from_column_slice(beta);
            let fit = x * &b;
            let offset = ybar - xbar.iter().zip(beta).map(|(m, c)| m * c).sum::<f64>();
            errs.push(test.iter().map(|&i| (y[i] - fit[i] - offset).powi(2)).sum::<f64>());
            fits.push(fit);
        }
        Ok((fits, errs))
    });
    let per_fold: Vec<_> = per_fold.into_iter().collect::<Result<_, _>>()?;
    // Paths stopped early are compared on their common prefix.
    let len = per_fold.iter().map(|(f, _)| f.len()).min().unwrap_or(0).min(full.len());
    let fits: Vec<Vec<DVector<f64>>> = per_fold.iter().map(|(f, _)| f.clone()).collect();
    let es = (0..len).map(|g| estimation_stability(&fits, g)).collect();
    let cv = (0..len)
        .map(|g| per_fold.iter().map(|(_, e)| e[g]).sum::<f64>() / n as f64)
        .collect();
    Ok((
        EscvCurve {
            lambdas: grid[..len].to_vec(),
            es,
            cv,
        },
        full,
    ))
}

/// Estimation-stability cross-validation on a coordinate-descent path,
/// refitted by OLS on the chosen support.
pub fn escv_select(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    opts: &EscvOptions,
    rng: &mut RngStream,
) -> Result<SelectionResult, IdentifyError> {
    let n = x.nrows();
    if opts.folds < 2 || n < 2 * opts.folds {
        return Err(IdentifyError::InvalidOption(format!("{} folds for {n} rows", opts.folds)));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % opts.folds;
    }
    let (curve, full) = escv_curve(x, y, penalty, opts, &folds)?;
    let method = format!("escv-{}", penalty.kind.label());
    let Some(g) = choose(&curve) else {
        let mut out = refit_selection(&method, &[], x, y)?;
        out.flags.push("all-unstable".into());
        return Ok(out);
    };
    let mut out = refit_selection(&method, &full.supports[g], x, y)?;
    out.lambda = Some(curve.lambdas[g]);
    Ok(out)
}
