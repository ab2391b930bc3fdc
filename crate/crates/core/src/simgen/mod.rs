//! Synthetic benchmark designs: independent Gaussian predictors, Gaussian
//! graphical models (cluster and scale-free) and a nonlinear network
//! dynamics surrogate, plus standardization and train/test splitting.

mod frank;
mod ggm;
mod independent;
mod io;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numcore::{NumError, RngStream};

pub use frank::{gen_frank_like, FrankParams, ResponseMode};
pub use ggm::{
    barabasi_albert, cluster_blocks, gen_cluster_ggm, gen_scalefree_ggm, ggm_regression,
    precision_from_edges, sample_gaussian, GgmRegression,
};
pub use independent::{gen_independent, gen_independent_with_support};
pub use io::{load_dataset, save_dataset};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("precision matrix not positive definite after {0} inflation attempts")]
    PrecisionNotPD(usize),
    #[error("no draw with a dominant complex-conjugate eigenpair after {0} attempts")]
    SpectralRescaleFailed(usize),
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),
    #[error("response has zero variance")]
    ConstantResponse,
    #[error("cannot split {0} rows into equal halves")]
    OddRowCount(usize),
    #[error("invalid design parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    Independent,
    Cluster,
    ScalefreeMax,
    ScalefreeMin,
    FrankMax,
    FrankMin,
}

impl Design {
    pub const ALL: [Design; 6] = [
        Design::Independent,
        Design::Cluster,
        Design::ScalefreeMax,
        Design::ScalefreeMin,
        Design::FrankMax,
        Design::FrankMin,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Design::Independent => "independent",
            Design::Cluster => "cluster",
            Design::ScalefreeMax => "scalefree-max",
            Design::ScalefreeMin => "scalefree-min",
            Design::FrankMax => "frank-max",
            Design::FrankMin => "frank-min",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Design {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Design::ALL
            .iter()
            .copied()
            .find(|d| d.label() == s)
            .ok_or_else(|| SimError::InvalidParameter(format!("unknown design '{s}'")))
    }
}

/// One generated sample: design matrix, response and the generating truth.
///
/// `truth` holds 0-based column indices of the explaining variables.
/// `beta0` and `noise_sd` are on the scale of generation (before any
/// standardization) and are absent for the dynamics surrogate.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub design: Design,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub truth: Vec<usize>,
    pub beta0: Option<Vec<f64>>,
    pub noise_sd: Option<f64>,
    pub seed: u64,
    pub stream: u64,
    /// Row index of each observation in the original generation.
    pub rows: Vec<usize>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn select_rows(&self, idx: &[usize]) -> Dataset {
        let x = self.x.select_rows(idx.iter());
        let y = DVector::from_iterator(idx.len(), idx.iter().map(|&i| self.y[i]));
        Dataset {
            design: self.design,
            x,
            y,
            truth: self.truth.clone(),
            beta0: self.beta0.clone(),
            noise_sd: self.noise_sd,
            seed: self.seed,
            stream: self.stream,
            rows: idx.iter().map(|&i| self.rows[i]).collect(),
        }
    }
}

/// Train and test halves of one `2n`-row generation.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub replicate: usize,
}

fn center_scale(v: &mut [f64]) -> Result<(), ()> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter_mut().for_each(|x| *x -= m);
    let ss: f64 = v.iter().map(|x| x * x).sum();
    let sd = (ss / (n - 1.0)).sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(());
    }
    v.iter_mut().for_each(|x| *x /= sd);
    // a second pass removes the rounding residue of the first
    let m2 = v.iter().sum::<f64>() / n;
    v.iter_mut().for_each(|x| *x -= m2);
    Ok(())
}

/// Center every column of `X` and `y` and scale to unit sample (n − 1) standard deviation.
pub fn standardize(d: &Dataset) -> Result<Dataset, SimError> {
    let (x, y) = standardize_xy(&d.x, &d.y)?;
    Ok(Dataset { x, y, ..d.clone() })
}

/// [`standardize`] on a bare design matrix and response.
pub fn standardize_xy(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DMatrix<f64>, DVector<f64>), SimError> {
    let mut x = x.clone();
    let mut y = y.clone();
    for j in 0..x.ncols() {
        let mut col = x.column_mut(j);
        center_scale(col.as_mut_slice()).map_err(|_| SimError::ConstantColumn(j))?;
    }
    center_scale(y.as_mut_slice()).map_err(|_| SimError::ConstantResponse)?;
    Ok((x, y))
}

/// Uniformly random disjoint halves, each standardized on its own.
pub fn split(d: &Dataset, replicate: usize, rng: &mut RngStream) -> Result<SplitPair, SimError> {
    let m = d.n();
    if !m.is_multiple_of(2) || m == 0 {
        return Err(SimError::OddRowCount(m));
    }
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(rng);
    let (a, b) = perm.split_at(m / 2);
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    Ok(SplitPair {
        train: standardize(&d.select_rows(&a))?,
        test: standardize(&d.select_rows(&b))?,
        replicate,
    })
}

/// Per-design generation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DesignSpec {
    pub name: Design,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: usize,
    #[serde(default = "default_blocks")]
    pub blocks: usize,
    #[serde(default = "default_connect_prob")]
    pub connect_prob: f64,
}

fn default_n() -> usize {
    150
}
fn default_p() -> usize {
    200
}
fn default_blocks() -> usize {
    5
}
fn default_connect_prob() -> f64 {
    0.3
}

impl DesignSpec {
    pub fn new(name: Design, n: usize, p: usize) -> Self {
        Self {
            name,
            n,
            p,
            blocks: default_blocks(),
            connect_prob: default_connect_prob(),
        }
    }

    /// Generate the raw `2n`-row sample for this design.
    pub fn generate(&self, rng: &mut RngStream) -> Result<Dataset, SimError> {
        match self.name {
            Design::Independent => gen_independent(self.n, self.p, rng),
            Design::Cluster => gen_cluster_ggm(self.n, self.p, self.blocks, self.connect_prob, rng),
            Design::ScalefreeMax => gen_scalefree_ggm(self.n, self.p, ResponseMode::Max, rng),
            Design::ScalefreeMin => gen_scalefree_ggm(self.n, self.p, ResponseMode::Min, rng),
            Design::FrankMax => gen_frank_like(self.n, self.p, ResponseMode::Max, &FrankParams::default(), rng),
            Design::FrankMin => gen_frank_like(self.n, self.p, ResponseMode::Min, &FrankParams::default(), rng),
        }
    }

    /// Generate, split and standardize one replicate.
    pub fn replicate(&self, master_seed: u64, replicate: usize) -> Result<SplitPair, SimError> {
        let root = RngStream::new(master_seed, replicate as u64).derive_named(self.name.label());
        let mut gen_rng = root.derive_named("generate");
        let mut split_rng = root.derive_named("split");
        let data = self.generate(&mut gen_rng)?;
        split(&data, replicate, &mut split_rng)
    }
}
