mod curves;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::regpath::RegularizationPath;

pub use curves::{common_cutoff, p_pr_auc, p_roc_auc, reference_pauc, CurveKind, CutoffMode, PartialArea};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Mean squared prediction error of `X_S β̂` on held-out rows.
pub fn test_mse(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize], beta: &[f64]) -> Result<f64, MetricError> {
    if x.nrows() != y.len() || support.len() != beta.len() || support.iter().any(|&j| j >= x.ncols()) {
        return Err(MetricError::DimensionMismatch(format!(
            "X {}x{}, y {}, support {}, beta {}",
            x.nrows(),
            x.ncols(),
            y.len(),
            support.len(),
            beta.len()
        )));
    }
    let mut r = y.clone();
    for (&j, &b) in support.iter().zip(beta) {
        r.axpy(-b, &x.column(j), 1.0);
    }
    Ok(r.norm_squared() / y.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConfusionSummary {
    /// Selected and explaining.
    pub relevant: usize,
    /// Selected but not explaining.
    pub irrelevant: usize,
    pub missed: usize,
    pub true_negatives: usize,
}

impl ConfusionSummary {
    /// 1 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        let pos = self.relevant + self.missed;
        if pos == 0 {
            1.0
        } else {
            self.relevant as f64 / pos as f64
        }
    }

    pub fn specificity(&self) -> f64 {
        let neg = self.irrelevant + self.true_negatives;
        if neg == 0 {
            1.0
        } else {
            self.true_negatives as f64 / neg as f64
        }
    }

    /// 0 for an empty selection.
    pub fn fdp(&self) -> f64 {
        let sel = self.relevant + self.irrelevant;
        if sel == 0 {
            0.0
        } else {
            self.irrelevant as f64 / sel as f64
        }
    }
}

/// Counts of a selection against the true support; indices are 0-based and
/// duplicates are ignored.
pub fn confusion(selected: &[usize], truth: &[usize], p: usize) -> ConfusionSummary {
    let mut in_truth = vec![false; p];
    truth.iter().filter(|&&j| j < p).for_each(|&j| in_truth[j] = true);
    let mut in_sel = vec![false; p];
    selected.iter().filter(|&&j| j < p).for_each(|&j| in_sel[j] = true);
    let mut c = ConfusionSummary {
        relevant: 0,
        irrelevant: 0,
        missed: 0,
        true_negatives: 0,
    };
    for (t, s) in in_truth.into_iter().zip(in_sel) {
        match (t, s) {
            (true, true) => c.relevant += 1,
            (false, true) => c.irrelevant += 1,
            (true, false) => c.missed += 1,
            (false, false) => c.true_negatives += 1,
        }
    }
    c
}

/// Per-variable scores, higher meaning selected earlier. `None` marks a
/// variable the method never ranks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableRanking {
    pub scores: Vec<Option<f64>>,
}

impl VariableRanking {
    pub fn new(scores: Vec<Option<f64>>) -> Self {
        Self { scores }
    }

    /// Largest `λ` at which each variable is in the support.
    pub fn from_path(path: &RegularizationPath, p: usize) -> Self {
        let mut scores = vec![None; p];
        for (lam, s) in path.lambdas.iter().zip(&path.supports) {
            for &j in s {
                let e: &mut Option<f64> = &mut scores[j];
                if e.is_none_or(|v| *lam > v) {
                    *e = Some(*lam);
                }
            }
        }
        Self { scores }
    }

    /// Nonzero entries ranked by value; zeros are unranked.
    pub fn from_nonzero(values: &[f64]) -> Self {
        Self {
            scores: values.iter().map(|&v| (v != 0.0 && v.is_finite()).then_some(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn mse_hand_example() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]);
        let y = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        // β̂ = (0.5) on column 1: fit (0, 1, 0.5); residuals (1, 1, 2.5).
        let v = test_mse(&x, &y, &[1], &[0.5]).unwrap();
        assert!((v - (1.0 + 1.0 + 6.25) / 3.0).abs() < 1e-12);
        assert_eq!(test_mse(&x, &y, &[0, 1], &[1.0, 1.0]).unwrap(), (0.0 + 0.0 + 1.0) / 3.0);
        assert!(test_mse(&x, &y, &[2], &[1.0]).is_err());
    }

    #[test]
    fn perfect_fit_has_zero_mse() {
        let x = DMatrix::from_fn(10, 3, |i, j| ((i * 3 + j) as f64).sin());
        let y = x.column(0) * 2.0 - x.column(2) * 0.5;
        assert!(test_mse(&x, &y, &[0, 2], &[2.0, -0.5]).unwrap() < 1e-28);
    }

    #[test]
    fn zero_model_mse_concentrates_near_one() {
        let mut bad = 0;
        for r in 0..500 {
            let mut rng = RngStream::new(r, 0);
            let mut y = DVector::from_fn(150, |_, _| rng.sample::<f64, _>(StandardNormal));
            let m = y.mean();
            y.add_scalar_mut(-m);
            let sd = (y.norm_squared() / 149.0).sqrt();
            y /= sd;
            let v = test_mse(&DMatrix::zeros(150, 1), &y, &[], &[]).unwrap();
            bad += usize::from(!(0.8..=1.2).contains(&v));
        }
        assert!(bad <= 5);
    }

    #[test]
    fn confusion_counts() {
        let c = confusion(&[1, 2, 3, 4], &[0, 1, 2], 10);
        assert_eq!((c.relevant, c.irrelevant, c.missed, c.true_negatives), (2, 2, 1, 5));
        assert!((c.recall() - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.specificity() - 5.0 / 7.0).abs() < 1e-15);
        assert_eq!(c.fdp(), 0.5);
        let e = confusion(&[], &[0, 1], 5);
        assert_eq!((e.recall(), e.specificity(), e.fdp()), (0.0, 1.0, 0.0));
        let s = confusion(&[0, 1], &[1, 0], 5);
        assert_eq!((s.recall(), s.specificity(), s.fdp()), (1.0, 1.0, 0.0));
    }

    #[test]
    fn path_ranking_uses_entry_lambda() {
        use crate::regpath::{lars_path, testutil::instance, LarsOptions, PenaltySpec};
        let (x, y) = instance(40, 8, 3, 1);
        let path = lars_path(&x, &y, &PenaltySpec::lasso(), &LarsOptions::default()).unwrap();
        let r = VariableRanking::from_path(&path, 8);
        let first = path.supports[0][0];
        assert_eq!(r.scores[first], Some(path.lambdas[0]));
        assert_eq!(VariableRanking::from_nonzero(&[0.0, -1.0, 2.0]).scores, vec![None, Some(-1.0), Some(2.0)]);
    }
}
