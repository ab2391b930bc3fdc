use serde::{Deserialize, Serialize};
use statrs::function::beta;

use super::NumError;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

impl WelchTest {
    pub fn significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Two-sided Welch t-test.
///
/// Two zero-variance samples with equal means yield
/// `Err(DegenerateSample)`; callers treat that as `p = 1`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest, NumError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(NumError::DomainError("each sample needs at least two values".into()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_sd(a).powi(2), sample_sd(b).powi(2));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        if ma == mb {
            return Err(NumError::DegenerateSample("both samples constant and equal".into()));
        }
        return Ok(WelchTest {
            t: f64::INFINITY.copysign(ma - mb),
            df: na + nb - 2.0,
            p_value: 0.0,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let p_value = if t == 0.0 {
        1.0
    } else {
        beta::beta_reg(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
    };
    Ok(WelchTest { t, df, p_value })
}
