//! Choosing one support from a refitted model collection by a penalized
//! loss: eBIC, slope heuristic, dimension jump and LinSelect.

mod datadriven;
mod linselect;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::{log_binom, NumError};
use crate::regpath::RefitModel;

pub use datadriven::{dimension_jump_select, slope_heuristic_select, DEFAULT_PLATEAU_FRACTION};
pub use linselect::{linselect_select, phi, psi, PsiTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SelectError {
    #[error("empty model collection")]
    EmptyCollection,
    #[error("need at least {need} distinct dimensions, got {got}")]
    TooFewDimensions { need: usize, got: usize },
    #[error("could not bracket Ψ({d}, {n}, {q:e})")]
    BracketFailure { d: usize, n: usize, q: f64 },
    #[error(transparent)]
    Num(#[from] NumError),
}

/// One model's criterion value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CriterionValue {
    /// Position in the collection passed to the selector.
    pub model_id: usize,
    pub dimension: usize,
    pub loss: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Chosen support with its refit and how it was chosen.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionResult {
    pub method: String,
    pub lambda: Option<f64>,
    /// Sorted 0-based indices.
    pub support: Vec<usize>,
    /// Refit coefficients aligned with `support`.
    pub beta: Vec<f64>,
    pub trace: Vec<CriterionValue>,
    pub flags: Vec<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct SelectionFile<'a> {
    method: &'a str,
    chosen_lambda: Option<f64>,
    support: Vec<usize>,
    beta_hat: &'a [f64],
    criterion_trace: &'a [CriterionValue],
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    flags: &'a [String],
}

impl SelectionResult {
    pub fn from_model(method: &str, m: &RefitModel, trace: Vec<CriterionValue>) -> Self {
        Self {
            method: method.to_string(),
            lambda: m.lambda.is_finite().then_some(m.lambda),
            support: m.support.clone(),
            beta: m.beta.clone(),
            trace,
            flags: Vec::new(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let f = SelectionFile {
            method: &self.method,
            chosen_lambda: self.lambda,
            support: self.support.iter().map(|j| j + 1).collect(),
            beta_hat: &self.beta,
            criterion_trace: &self.trace,
            flags: &self.flags,
        };
        serde_json::to_value(f).expect("selection serializes")
    }

    /// Prediction `X_S β̂` for the rows of `x`.
    pub fn predict(&self, x: &nalgebra::DMatrix<f64>) -> nalgebra::DVector<f64> {
        let mut out = nalgebra::DVector::zeros(x.nrows());
        for (&j, b) in self.support.iter().zip(&self.beta) {
            out.axpy(*b, &x.column(j), 1.0);
        }
        out
    }
}

/// Index of the minimal total; ties go to the smaller dimension, then to
/// the lexicographically smaller support, so the result does not depend on
/// collection order.
pub(crate) fn argmin_total(models: &[RefitModel], totals: &[f64]) -> Option<usize> {
    (0..models.len())
        .filter(|&i| totals[i].is_finite())
        .min_by(|&a, &b| {
            totals[a]
                .total_cmp(&totals[b])
                .then(models[a].dimension.cmp(&models[b].dimension))
                .then(models[a].support.cmp(&models[b].support))
        })
}

/// `D(2.5 + ln(p/D))`.
pub fn shape_penalty(d: usize, p: usize) -> Result<f64, SelectError> {
    if d == 0 || d > p {
        return Err(NumError::DomainError(format!("shape needs 1 ≤ D ≤ p, got D={d}, p={p}")).into());
    }
    let df = d as f64;
    Ok(df * (2.5 + (p as f64 / df).ln()))
}

/// Extended BIC `n ln(rss/n) + D ln n + 2δ ln C(p, D)`; models with zero
/// residual are skipped.
pub fn ebic_select(models: &[RefitModel], n: usize, p: usize, delta: f64) -> Result<SelectionResult, SelectError> {
    if models.is_empty() {
        return Err(SelectError::EmptyCollection);
    }
    let nf = n as f64;
    let mut trace = Vec::with_capacity(models.len());
    let mut totals = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        let d = m.dimension;
        let loss = if m.rss > 0.0 { nf * (m.rss / nf).ln() } else { f64::NAN };
        let pen = d as f64 * nf.ln() + 2.0 * delta * log_binom(p as u64, d as u64)?;
        let total = loss + pen;
        totals.push(if total.is_finite() { total } else { f64::INFINITY });
        trace.push(CriterionValue {
            model_id: i,
            dimension: d,
            loss,
            penalty: pen,
            total,
        });
    }
    let best = argmin_total(models, &totals).ok_or(SelectError::EmptyCollection)?;
    Ok(SelectionResult::from_model("ebic", &models[best], trace))
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::regpath::RefitModel;

    pub fn model(support: Vec<usize>, rss: f64, n: usize) -> RefitModel {
        let d = support.len();
        RefitModel {
            beta: vec![1.0; d],
            dimension: d,
            support,
            dropped: vec![],
            rss,
            sigma2: rss / n as f64,
            lambda: 1.0 / (d + 1) as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::model;
    use super::*;
    use crate::regpath::refit;
    use crate::regpath::testutil::instance;

    #[test]
    fn shape_examples() {
        assert!((shape_penalty(200, 200).unwrap() - 500.0).abs() < 1e-12);
        assert!((shape_penalty(1, 200).unwrap() - 7.798317366548036).abs() < 1e-12);
        let v: Vec<f64> = (1..=200).map(|d| shape_penalty(d, 200).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert!(shape_penalty(0, 5).is_err());
    }

    #[test]
    fn equal_rss_prefers_smaller_model() {
        let ms = vec![model(vec![0, 1], 10.0, 50), model(vec![2], 10.0, 50)];
        let r = ebic_select(&ms, 50, 6, 1.0).unwrap();
        assert_eq!(r.support, vec![2]);
    }

    #[test]
    fn delta_zero_is_bic() {
        let ms = vec![model(vec![0], 40.0, 50), model(vec![0, 1], 30.0, 50)];
        let r = ebic_select(&ms, 50, 6, 0.0).unwrap();
        for t in &r.trace {
            assert!((t.penalty - t.dimension as f64 * 50f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn true_support_beats_empty_on_easy_instance() {
        let (x, y) = instance(150, 20, 3, 12);
        let ms = vec![refit(&x, &y, &[]).unwrap(), refit(&x, &y, &[0, 1, 2]).unwrap()];
        let r = ebic_select(&ms, 150, 20, 1.0).unwrap();
        assert_eq!(r.support, vec![0, 1, 2]);
    }

    #[test]
    fn matches_exhaustive_search() {
        for seed in 0..100 {
            let (x, y) = instance(50, 6, 2, 1000 + seed);
            let all: Vec<RefitModel> = (0u32..64)
                .map(|mask| {
                    let s: Vec<usize> = (0..6).filter(|j| mask & (1 << j) != 0).collect();
                    refit(&x, &y, &s).unwrap()
                })
                .collect();
            let r = ebic_select(&all, 50, 6, 1.0).unwrap();
            // independent evaluation of the criterion
            let crit = |m: &RefitModel| {
                let d = m.dimension as u64;
                let binom: u64 = (0..d).map(|i| 6 - i).product::<u64>() / (1..=d).product::<u64>().max(1);
                50.0 * (m.rss / 50.0).ln() + d as f64 * 50f64.ln() + 2.0 * (binom as f64).ln()
            };
            let best = all
                .iter()
                .min_by(|a, b| crit(a).total_cmp(&crit(b)).then(a.dimension.cmp(&b.dimension)))
                .unwrap();
            assert_eq!(r.support, best.support, "seed {seed}");
        }
    }

    #[test]
    fn order_invariant() {
        let mut ms = vec![
            model(vec![0], 40.0, 50),
            model(vec![0, 1], 31.0, 50),
            model(vec![0, 1, 2], 30.0, 50),
        ];
        let a = ebic_select(&ms, 50, 10, 1.0).unwrap().support;
        ms.reverse();
        assert_eq!(ebic_select(&ms, 50, 10, 1.0).unwrap().support, a);
    }

    #[test]
    fn json_shape() {
        let ms = vec![model(vec![3], 10.0, 50)];
        let v = ebic_select(&ms, 50, 6, 1.0).unwrap().to_json();
        assert_eq!(v["support"], serde_json::json!([4]));
        assert_eq!(v["method"], "ebic");
        assert!(v["criterion-trace"].is_array());
    }
}
