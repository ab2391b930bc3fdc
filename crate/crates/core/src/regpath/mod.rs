//! Lasso and elastic-net regularization paths (LARS homotopy and
//! coordinate descent on a geometric grid), KKT certificates, and
//! least-squares refits on path supports.
//!
//! Objective at level `λ`:
//! `(1/2n)‖y − Xβ‖² + λ(1−α) Σ |βⱼ|/Wⱼ + μ‖β‖²`, where the ridge weight `μ`
//! is `λα` on coordinate-descent paths and a fixed constant on LARS paths.

mod cd;
mod chol;
mod lars;
mod refit;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cd::{cd_path, cd_path_on_grid, cd_solve, geometric_grid, CdOptions, CdSolution};
pub use lars::{lars_path, LarsOptions};
pub use refit::{dedupe_collection, refit, RefitModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegPathError {
    #[error("Xᵀy is zero: no variable ever enters")]
    AllZeroCorrelation,
    #[error("dimension mismatch: X is {0}×{1}, y has {2} rows")]
    DimensionMismatch(usize, usize, usize),
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    Lasso,
    ElasticNet,
}

impl PenaltyKind {
    pub fn label(self) -> &'static str {
        match self {
            PenaltyKind::Lasso => "lasso",
            PenaltyKind::ElasticNet => "enet",
        }
    }
}

/// Penalty `(1−α)Σ|βⱼ|/Wⱼ + α‖β‖²` with optional per-variable weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl PenaltySpec {
    pub fn lasso() -> Self {
        Self {
            kind: PenaltyKind::Lasso,
            alpha: 0.0,
            weights: None,
        }
    }

    pub fn elastic_net(alpha: f64) -> Result<Self, RegPathError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(RegPathError::InvalidPenalty(format!("alpha {alpha} not in (0, 1)")));
        }
        Ok(Self {
            kind: PenaltyKind::ElasticNet,
            alpha,
            weights: None,
        })
    }

    pub fn with_weights(mut self, w: Vec<f64>) -> Result<Self, RegPathError> {
        if let Some(v) = w.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(RegPathError::InvalidPenalty(format!("weight {v} not in (0, 1]")));
        }
        self.weights = Some(w);
        Ok(self)
    }

    pub fn validate(&self, p: usize) -> Result<(), RegPathError> {
        let ok = match self.kind {
            PenaltyKind::Lasso => self.alpha == 0.0,
            PenaltyKind::ElasticNet => self.alpha > 0.0 && self.alpha < 1.0,
        };
        if !ok {
            return Err(RegPathError::InvalidPenalty(format!(
                "alpha {} inconsistent with {:?}",
                self.alpha, self.kind
            )));
        }
        match &self.weights {
            Some(w) if w.len() != p => Err(RegPathError::InvalidPenalty(format!(
                "{} weights for {p} variables",
                w.len()
            ))),
            Some(w) if w.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) => {
                Err(RegPathError::InvalidPenalty("weight outside (0, 1]".into()))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// Multiplier of `λ` in the L1 term.
    #[inline]
    pub fn l1_factor(&self) -> f64 {
        1.0 - self.alpha
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Lars,
    GradientDescent,
}

/// Ridge weight `μ` of the objective along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ridge {
    /// `μ = αλ`
    Proportional,
    Fixed(f64),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PathMeta {
    /// Steps at which several variables tied for entry; lowest index entered.
    pub ties: Vec<(usize, Vec<usize>)>,
    pub drops: usize,
    /// Variables skipped because they were collinear with the active set.
    pub collinear: Vec<usize>,
    /// Grid indices where coordinate descent hit the sweep limit.
    pub nonconverged: Vec<usize>,
    /// Grid was cut short (saturated fit or too many variables).
    pub truncated: bool,
}

/// Ordered `λ` grid with the support and coefficients at each point.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizationPath {
    pub algorithm: Algorithm,
    pub penalty: PenaltySpec,
    pub ridge: Ridge,
    pub lambdas: Vec<f64>,
    /// Sorted 0-based indices.
    pub supports: Vec<Vec<usize>>,
    pub coefs: Vec<Vec<f64>>,
    /// `dβ/d(−λ)` beyond the last breakpoint (LARS only).
    pub tail: Option<Vec<f64>>,
    pub meta: PathMeta,
}

impl RegularizationPath {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn ridge_at(&self, lambda: f64) -> f64 {
        match self.ridge {
            Ridge::Proportional => self.penalty.alpha * lambda,
            Ridge::Fixed(mu) => mu,
        }
    }

    /// Index of the last grid point with `λₖ ≥ λ`.
    fn segment(&self, lambda: f64) -> Option<usize> {
        let k = self.lambdas.partition_point(|&l| l >= lambda);
        k.checked_sub(1)
    }

    /// Support in force at `λ`; empty above the first point.
    pub fn support_at(&self, lambda: f64) -> &[usize] {
        self.segment(lambda).map_or(&[], |k| &self.supports[k])
    }

    /// Coefficients at `λ`, linear between grid points.
    pub fn coef_at(&self, lambda: f64) -> Vec<f64> {
        let p = self.coefs.first().map_or(0, Vec::len);
        let Some(k) = self.segment(lambda) else {
            return vec![0.0; p];
        };
        let lk = self.lambdas[k];
        if k + 1 < self.len() {
            let l1 = self.lambdas[k + 1];
            let t = (lk - lambda) / (lk - l1);
            self.coefs[k]
                .iter()
                .zip(&self.coefs[k + 1])
                .map(|(a, b)| a + t * (b - a))
                .collect()
        } else {
            match &self.tail {
                Some(d) => self.coefs[k]
                    .iter()
                    .zip(d)
                    .map(|(a, s)| a + (lk - lambda) * s)
                    .collect(),
                None => self.coefs[k].clone(),
            }
        }
    }

    /// Elastic-net rescaling factor `1 + 2μ` for LARS paths.
    pub fn enet_rescale(&self) -> f64 {
        match self.ridge {
            Ridge::Fixed(mu) => 1.0 + 2.0 * mu,
            Ridge::Proportional => 1.0,
        }
    }

    pub fn to_json(&self, with_coefs: bool) -> serde_json::Value {
        let file = PathFile {
            algorithm: self.algorithm,
            penalty: self.penalty.clone(),
            lambdas: self.lambdas.clone(),
            supports: self
                .supports
                .iter()
                .map(|s| s.iter().map(|j| j + 1).collect())
                .collect(),
            coefs: with_coefs.then(|| self.coefs.clone()),
        };
        serde_json::to_value(file).expect("path serializes")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct PathFile {
    algorithm: Algorithm,
    penalty: PenaltySpec,
    lambdas: Vec<f64>,
    supports: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefs: Option<Vec<Vec<f64>>>,
}

pub(crate) fn check_dims(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(), RegPathError> {
    if x.nrows() != y.len() || x.nrows() == 0 {
        return Err(RegPathError::DimensionMismatch(x.nrows(), x.ncols(), y.len()));
    }
    Ok(())
}

/// Smallest `λ` at which the penalized solution is zero.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>, penalty: &PenaltySpec) -> Result<f64, RegPathError> {
    check_dims(x, y)?;
    penalty.validate(x.ncols())?;
    let n = x.nrows() as f64;
    let xty = x.tr_mul(y);
    let lm = xty
        .iter()
        .enumerate()
        .map(|(j, c)| c.abs() * penalty.weight(j))
        .fold(0.0, f64::max)
        / (n * penalty.l1_factor());
    if lm > 0.0 {
        Ok(lm)
    } else {
        Err(RegPathError::AllZeroCorrelation)
    }
}

/// Largest violation of the subgradient optimality conditions at `(λ, β)`.
pub fn kkt_violation(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    lambda: f64,
    ridge: f64,
    beta: &[f64],
) -> f64 {
    let n = x.nrows() as f64;
    let b = DVector::from_column_slice(beta);
    let r = y - x * &b;
    let xr = x.tr_mul(&r) / n;
    (0..x.ncols())
        .map(|j| {
            let g = xr[j] - 2.0 * ridge * beta[j];
            let pen = lambda * penalty.l1_factor() / penalty.weight(j);
            if beta[j] != 0.0 {
                (g - pen * beta[j].signum()).abs()
            } else {
                (g.abs() - pen).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Penalized objective at `(λ, β)` with ridge weight `μ`.
pub fn objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    lambda: f64,
    ridge: f64,
    beta: &[f64],
) -> f64 {
    let n = x.nrows() as f64;
    let r = y - x * DVector::from_column_slice(beta);
    let l1: f64 = beta.iter().enumerate().map(|(j, b)| b.abs() / penalty.weight(j)).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    r.norm_squared() / (2.0 * n) + lambda * penalty.l1_factor() * l1 + ridge * l2
}
