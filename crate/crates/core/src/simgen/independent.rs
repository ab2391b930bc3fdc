use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Design, SimError};
use crate::numcore::RngStream;

/// `2n` rows of iid standard Gaussian predictors, a support of uniform size
/// in `1..=p`, coefficients `U(0.5, 2)` and unit Gaussian noise.
pub fn gen_independent(n: usize, p: usize, rng: &mut RngStream) -> Result<Dataset, SimError> {
    if p == 0 {
        return Err(SimError::InvalidParameter("p must be at least 1".into()));
    }
    let k = rng.gen_range(1..=p);
    gen_independent_with_support(n, p, k, rng)
}

/// As [`gen_independent`] with a fixed support size `k`.
pub fn gen_independent_with_support(
    n: usize,
    p: usize,
    k: usize,
    rng: &mut RngStream,
) -> Result<Dataset, SimError> {
    if n < 2 || p == 0 || k > p {
        return Err(SimError::InvalidParameter(format!("n={n}, p={p}, k={k}")));
    }
    let m = 2 * n;
    let mut truth = index::sample(rng, p, k).into_vec();
    truth.sort_unstable();
    let mut beta0 = vec![0.0; p];
    for &j in &truth {
        beta0[j] = rng.gen_range(0.5..2.0);
    }
    let x = DMatrix::from_fn(m, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let signal = &x * DVector::from_column_slice(&beta0);
    let y = DVector::from_fn(m, |i, _| signal[i] + rng.sample::<f64, _>(StandardNormal));
    Ok(Dataset {
        design: Design::Independent,
        x,
        y,
        truth,
        beta0: Some(beta0),
        noise_sd: Some(1.0),
        seed: rng.seed(),
        stream: rng.stream(),
        rows: (0..m).collect(),
    })
}
