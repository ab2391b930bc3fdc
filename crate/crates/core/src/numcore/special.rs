use statrs::function::{beta, gamma};

use super::NumError;

pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// `ln C(p, d)`.
///
/// Short products are summed term by term; long ones go through log-gamma,
/// where the three large terms no longer cancel catastrophically.
pub fn log_binom(p: u64, d: u64) -> Result<f64, NumError> {
    if d > p {
        return Err(NumError::DomainError(format!("binomial ({p} choose {d})")));
    }
    let k = d.min(p - d);
    if k == 0 {
        return Ok(0.0);
    }
    if k <= 4096 {
        let base = (p - k) as f64;
        let mut acc = 0.0;
        for i in 1..=k {
            acc += ((base + i as f64) / i as f64).ln();
        }
        return Ok(acc);
    }
    let p = p as f64;
    let d = d as f64;
    Ok(ln_gamma(p + 1.0) - ln_gamma(d + 1.0) - ln_gamma(p - d + 1.0))
}

fn check_df(df: f64) -> Result<(), NumError> {
    if !(df >= 1.0) || !df.is_finite() {
        return Err(NumError::DomainError(format!("degrees of freedom {df} < 1")));
    }
    Ok(())
}

/// `P(χ²_df ≤ x)` via the regularized lower incomplete gamma function.
pub fn chi2_cdf(df: f64, x: f64) -> Result<f64, NumError> {
    check_df(df)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma::gamma_lr(df / 2.0, x / 2.0))
}

/// `P(χ²_df > x)`, computed from the upper incomplete gamma to keep
/// precision in the tail.
pub fn chi2_sf(df: f64, x: f64) -> Result<f64, NumError> {
    check_df(df)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma::gamma_ur(df / 2.0, x / 2.0))
}

/// Inverse of [`chi2_cdf`] by bracketed bisection.
pub fn chi2_quantile(df: f64, prob: f64) -> Result<f64, NumError> {
    check_df(df)?;
    if !(0.0..1.0).contains(&prob) {
        return Err(NumError::DomainError(format!("probability {prob} outside [0, 1)")));
    }
    if prob == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = df.max(1.0);
    while chi2_cdf(df, hi)? < prob {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(df, mid)? < prob {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `1 − I_x(a, b)` evaluated as `I_{1−x}(b, a)`.
pub fn beta_sf(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x >= 1.0 {
        return 0.0;
    }
    beta::beta_reg(b, a, 1.0 - x)
}

/// Survival function of the central F distribution with `(d1, d2)` degrees of freedom.
pub fn f_sf(d1: f64, d2: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    // P(F > x) = I_{d2/(d2 + d1 x)}(d2/2, d1/2)
    let z = d2 / (d2 + d1 * x);
    beta::beta_reg(d2 / 2.0, d1 / 2.0, z)
}
