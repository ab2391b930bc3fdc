//! Variable identification by resampling and knockoffs: ESCV, Bolasso,
//! Stability Selection, Tigress and the knockoff filter.

mod escv;
mod knockoff;
mod resample;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modelselect::SelectionResult;
use crate::numcore::NumError;
use crate::regpath::{refit, RegPathError};

pub use escv::{escv_select, EscvOptions};
pub use knockoff::{knockoff_construct, knockoff_filter, KnockoffDesign, KnockoffOptions, KnockoffStats};
pub use resample::{frequency_grid, resample_frequencies, tigress_score, GridMode, ResamplePlan, Scheme, TigressOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentifyError {
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Path(#[from] RegPathError),
    #[error(transparent)]
    Num(#[from] NumError),
}

/// Per-variable selection frequencies along a grid, plus the aggregated
/// score used for thresholding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FrequencyProfile {
    pub method: String,
    /// `λ` values, or LARS step numbers for Tigress.
    pub grid: Vec<f64>,
    /// `freq[j][g]`: fraction of resamples whose support at grid point `g`
    /// contains variable `j`.
    pub freq: Vec<Vec<f64>>,
    /// Aggregated per-variable score in `[0, 1]`.
    pub score: Vec<f64>,
    pub resamples: usize,
    /// Resamples dropped for a constant column.
    pub dropped: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl FrequencyProfile {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("profile serializes")
    }
}

/// Variables whose score exceeds `threshold`, refitted by OLS on `(x, y)`.
pub fn threshold_select(
    profile: &FrequencyProfile,
    threshold: f64,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<SelectionResult, IdentifyError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(IdentifyError::InvalidOption(format!("threshold {threshold} outside (0, 1]")));
    }
    let support: Vec<usize> = (0..profile.score.len())
        .filter(|&j| profile.score[j] > threshold)
        .collect();
    let mut out = refit_selection(&profile.method, &support, x, y)?;
    out.flags.extend(profile.flags.iter().cloned());
    Ok(out)
}

/// OLS refit of a chosen support wrapped as a selection result. Supports
/// too large for a least-squares fit keep their `n − 1` highest-priority
/// (earliest listed) columns and are flagged.
pub(crate) fn refit_selection(
    method: &str,
    support: &[usize],
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> Result<SelectionResult, IdentifyError> {
    let cap = x.nrows().saturating_sub(1);
    let mut flags = Vec::new();
    let kept = if support.len() > cap {
        flags.push("support-truncated".to_string());
        &support[..cap]
    } else {
        support
    };
    let m = refit(x, y, kept)?;
    if !m.dropped.is_empty() {
        flags.push("collinear-dropped".to_string());
    }
    Ok(SelectionResult {
        method: method.to_string(),
        lambda: None,
        support: m.support,
        beta: m.beta,
        trace: Vec::new(),
        flags,
    })
}
