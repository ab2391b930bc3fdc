use nalgebra::{DMatrix, DVector, Schur};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};

use super::ggm::degree_pick;
use super::{Dataset, Design, SimError};
use crate::numcore::RngStream;

/// Which node of the network serves as the response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponseMode {
    Max,
    Min,
}

/// Parameters of the network-dynamics surrogate.
#[derive(Clone, Debug, PartialEq)]
pub struct FrankParams {
    pub min_in_degree: usize,
    pub max_in_degree: usize,
    /// Exponent of the truncated power law on in-degrees.
    pub degree_exponent: f64,
    pub weight_low: f64,
    pub weight_high: f64,
    pub sigma_dyn: f64,
    pub burn_in: usize,
    /// Steps between recorded states.
    pub stride: usize,
    pub max_attempts: usize,
    /// Minimum relative gap between the dominant pair and the next modulus.
    pub spectral_gap: f64,
}

impl Default for FrankParams {
    fn default() -> Self {
        Self {
            min_in_degree: 1,
            max_in_degree: 50,
            degree_exponent: 2.75,
            weight_low: 0.5,
            weight_high: 1.0,
            sigma_dyn: 0.1,
            burn_in: 200,
            stride: 1,
            max_attempts: 100,
            spectral_gap: 1e-6,
        }
    }
}

fn signed(prm: &FrankParams, rng: &mut RngStream) -> f64 {
    let mag = rng.gen_range(prm.weight_low..prm.weight_high);
    if rng.gen::<bool>() {
        mag
    } else {
        -mag
    }
}

fn draw_network(p: usize, prm: &FrankParams, rng: &mut RngStream) -> (DMatrix<f64>, Vec<Vec<usize>>) {
    let hi = prm.max_in_degree.min(p - 1);
    let lo = prm.min_in_degree.clamp(1, hi);
    let degrees: Vec<usize> = (lo..=hi).collect();
    let w = WeightedIndex::new(degrees.iter().map(|&k| (k as f64).powf(-prm.degree_exponent)))
        .expect("positive weights");
    let mut a = DMatrix::zeros(p, p);
    let mut parents = Vec::with_capacity(p);
    for i in 0..p {
        let k = degrees[w.sample(rng)];
        // regulators are any other node, uniformly
        let mut par: Vec<usize> = sample(rng, p - 1, k)
            .into_iter()
            .map(|j| if j >= i { j + 1 } else { j })
            .collect();
        par.sort_unstable();
        for &j in &par {
            a[(i, j)] = signed(prm, rng);
        }
        parents.push(par);
    }
    (a, parents)
}

/// Scale `a` to unit spectral radius when its dominant eigenvalues form a
/// single complex-conjugate pair separated from the rest.
fn rescale_to_unit_pair(a: &DMatrix<f64>, gap: f64) -> Option<DMatrix<f64>> {
    // unbounded QR iterations can stall on sparse inputs
    let ev = Schur::try_new(a.clone(), f64::EPSILON, 100 * a.nrows())?.complex_eigenvalues();
    let mut mods: Vec<(f64, f64)> = ev.iter().map(|z| (z.norm(), z.im)).collect();
    mods.sort_by(|x, y| y.0.total_cmp(&x.0));
    if mods.len() < 3 {
        return None;
    }
    let (r0, im0) = mods[0];
    let (r1, im1) = mods[1];
    let r2 = mods[2].0;
    let pair = im0.abs() > gap * r0 && (im0 + im1).abs() <= 1e-8 * r0 && (r0 - r1).abs() <= 1e-8 * r0;
    if !pair || r0 <= 0.0 || r2 >= r0 * (1.0 - gap) {
        return None;
    }
    Some(a / r0)
}

/// Nonlinear network-dynamics surrogate for a gene regulatory simulator.
///
/// Draws a sparse signed interaction matrix with power-law in-degrees,
/// rescales it to have exactly one complex pair on the unit circle, runs
/// `x ← tanh(A x) + ε` and records `2n` states. The response is the node of
/// largest (or smallest) in-degree and the truth is its parent set.
pub fn gen_frank_like(
    n: usize,
    p: usize,
    mode: ResponseMode,
    prm: &FrankParams,
    rng: &mut RngStream,
) -> Result<Dataset, SimError> {
    if p < 10 || n < 2 || prm.stride == 0 {
        return Err(SimError::InvalidParameter(format!("n={n}, p={p}, stride={}", prm.stride)));
    }
    // p covariates plus the response node
    let d = p + 1;
    let (a, parents) = (0..prm.max_attempts)
        .find_map(|_| {
            let (raw, parents) = draw_network(d, prm, rng);
            rescale_to_unit_pair(&raw, prm.spectral_gap).map(|a| (a, parents))
        })
        .ok_or(SimError::SpectralRescaleFailed(prm.max_attempts))?;

    let in_degree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let response = degree_pick(&in_degree, mode);

    let noise = Normal::new(0.0, prm.sigma_dyn).map_err(|e| SimError::InvalidParameter(e.to_string()))?;
    let m = 2 * n;
    let mut state = DVector::from_fn(d, |_, _| noise.sample(rng));
    let step = |s: &DVector<f64>, rng: &mut RngStream| -> DVector<f64> {
        (&a * s).map(f64::tanh) + DVector::from_fn(d, |_, _| noise.sample(rng))
    };
    for _ in 0..prm.burn_in {
        state = step(&state, rng);
    }
    let mut states = DMatrix::zeros(m, d);
    for t in 0..m {
        for _ in 0..prm.stride {
            state = step(&state, rng);
        }
        states.row_mut(t).tr_copy_from(&state);
    }

    let keep: Vec<usize> = (0..d).filter(|&j| j != response).collect();
    let x = states.select_columns(keep.iter());
    let y = DVector::from_iterator(m, states.column(response).iter().copied());
    let truth = parents[response]
        .iter()
        .map(|&j| if j > response { j - 1 } else { j })
        .collect();
    Ok(Dataset {
        design: match mode {
            ResponseMode::Max => Design::FrankMax,
            ResponseMode::Min => Design::FrankMin,
        },
        x,
        y,
        truth,
        beta0: None,
        noise_sd: None,
        seed: rng.seed(),
        stream: rng.stream(),
        rows: (0..m).collect(),
    })
}
