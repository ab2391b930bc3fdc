use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_dims, Algorithm, RegPathError, RegularizationPath};

/// Least-squares fit restricted to a support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RefitModel {
    /// Columns kept in the fit (sorted, 0-based).
    pub support: Vec<usize>,
    /// Requested columns dropped as linearly dependent on earlier ones.
    pub dropped: Vec<usize>,
    pub beta: Vec<f64>,
    pub rss: f64,
    pub sigma2: f64,
    pub dimension: usize,
    /// Largest path `λ` that produced this support.
    pub lambda: f64,
}

const DEPENDENCE_RTOL: f64 = 1e-9;

/// OLS on the columns in `support` by modified Gram–Schmidt in index
/// order; a column dependent on lower-indexed ones is dropped.
pub fn refit(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> Result<RefitModel, RegPathError> {
    check_dims(x, y)?;
    let n = x.nrows();
    let mut cols = support.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if let Some(&j) = cols.iter().find(|&&j| j >= x.ncols()) {
        return Err(RegPathError::InvalidOption(format!("column {j} out of range")));
    }
    if cols.len() > n.saturating_sub(1) {
        return Err(RegPathError::InvalidOption(format!(
            "support of size {} exceeds n − 1 = {}",
            cols.len(),
            n - 1
        )));
    }
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(cols.len());
    // upper-triangular R, column by column
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let mut kept = Vec::with_capacity(cols.len());
    let mut dropped = Vec::new();
    for &j in &cols {
        let orig = x.column(j).into_owned();
        let norm0 = orig.norm();
        let mut v = orig;
        let mut rc = vec![0.0; q.len()];
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = qi.dot(&v);
                rc[i] += c;
                v.axpy(-c, qi, 1.0);
            }
        }
        let nv = v.norm();
        if !(nv > DEPENDENCE_RTOL * norm0) {
            dropped.push(j);
            continue;
        }
        rc.push(nv);
        q.push(v / nv);
        r.push(rc);
        kept.push(j);
    }
    let mut res = y.clone();
    let mut qty = Vec::with_capacity(q.len());
    for qi in &q {
        let c = qi.dot(&res);
        qty.push(c);
        res.axpy(-c, qi, 1.0);
    }
    let k = kept.len();
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|t| r[t][i] * beta[t]).sum();
        beta[i] = (qty[i] - s) / r[i][i];
    }
    let rss = res.norm_squared();
    Ok(RefitModel {
        support: kept,
        dropped,
        beta,
        rss,
        sigma2: rss / n as f64,
        dimension: k,
        lambda: f64::NAN,
    })
}

/// Unique supports of a path, each with its largest `λ`, refitted by OLS
/// and ordered by dimension then decreasing `λ`. LARS paths keep only the
/// first support of each dimension. Supports larger than `n − 2` are left
/// out.
pub fn dedupe_collection(
    path: &RegularizationPath,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<Vec<RefitModel>, RegPathError> {
    let cap = x.nrows().saturating_sub(2);
    let mut seen: HashSet<&[usize]> = HashSet::new();
    let mut dims: HashSet<usize> = HashSet::new();
    let mut out = Vec::new();
    for (lam, s) in path.lambdas.iter().zip(&path.supports) {
        if s.len() > cap || !seen.insert(s.as_slice()) {
            continue;
        }
        if path.algorithm == Algorithm::Lars && !dims.insert(s.len()) {
            continue;
        }
        let mut m = refit(x, y, s)?;
        m.lambda = *lam;
        out.push(m);
    }
    out.sort_by(|a, b| {
        a.support
            .len()
            .cmp(&b.support.len())
            .then(b.lambda.total_cmp(&a.lambda))
    });
    Ok(out)
}
