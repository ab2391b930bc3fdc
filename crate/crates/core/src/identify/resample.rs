use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FrequencyProfile, IdentifyError};
use crate::numcore::RngStream;
use crate::par::map_indexed;
use crate::regpath::{
    cd_path_on_grid, cd_solve, geometric_grid, lambda_max, lars_path, Algorithm, CdOptions, LarsOptions, PenaltySpec,
    RegPathError, RegularizationPath,
};
use crate::simgen::standardize_xy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `n` rows drawn with replacement.
    Bootstrap,
    /// `⌊n/2⌋` distinct rows, plus the complement as a second resample.
    HalfSubsample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    /// Resamples drawn once and followed along the whole grid.
    SharedSamples,
    /// Fresh resamples at every grid point (coordinate descent only).
    PerLambda,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResamplePlan {
    pub scheme: Scheme,
    /// Number of draws; a half-subsample draw yields two resamples.
    pub count: usize,
    pub grid_mode: GridMode,
    /// Draw penalty weights `Wⱼ ~ U(weight_low, 1)` per resample.
    pub randomized: bool,
    pub weight_low: f64,
    pub algorithm: Algorithm,
    /// Solver settings for coordinate-descent fits.
    pub cd: CdOptions,
}

impl Default for ResamplePlan {
    fn default() -> Self {
        Self {
            scheme: Scheme::Bootstrap,
            count: 100,
            grid_mode: GridMode::SharedSamples,
            randomized: false,
            weight_low: 0.5,
            algorithm: Algorithm::GradientDescent,
            cd: CdOptions::default(),
        }
    }
}

impl ResamplePlan {
    fn validate(&self) -> Result<(), IdentifyError> {
        if self.count == 0 {
            return Err(IdentifyError::InvalidOption("resample count must be ≥ 1".into()));
        }
        if !(self.weight_low > 0.0 && self.weight_low <= 1.0) {
            return Err(IdentifyError::InvalidOption(format!("weight-low {}", self.weight_low)));
        }
        if self.grid_mode == GridMode::PerLambda && self.algorithm == Algorithm::Lars {
            return Err(IdentifyError::InvalidOption("per-lambda resampling needs coordinate descent".into()));
        }
        Ok(())
    }

    fn label(&self) -> String {
        let scheme = match self.scheme {
            Scheme::Bootstrap => "bootstrap",
            Scheme::HalfSubsample => "half-subsample",
        };
        let mode = match self.grid_mode {
            GridMode::SharedSamples => "shared",
            GridMode::PerLambda => "per-lambda",
        };
        let rand = if self.randomized { "-randomized" } else { "" };
        format!("{scheme}-{mode}{rand}")
    }
}

/// Common evaluation grid: `size` geometric points below the full-data `λ_max`.
pub fn frequency_grid(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    size: usize,
    eps_ratio: f64,
) -> Result<Vec<f64>, IdentifyError> {
    let unweighted = PenaltySpec {
        weights: None,
        ..penalty.clone()
    };
    let lm = lambda_max(x, y, &unweighted)?;
    Ok(geometric_grid(lm, eps_ratio, size))
}

/// One resample: row indices and optional penalty weights.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Draw {
    pub rows: Vec<usize>,
    pub weights: Option<Vec<f64>>,
}

fn draw(scheme: Scheme, n: usize, p: usize, randomized: Option<f64>, rng: &mut RngStream) -> Vec<Draw> {
    let row_sets = match scheme {
        Scheme::Bootstrap => vec![(0..n).map(|_| rng.gen_range(0..n)).collect::<Vec<_>>()],
        Scheme::HalfSubsample => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(rng);
            let (a, b) = idx.split_at(n / 2);
            vec![a.to_vec(), b.to_vec()]
        }
    };
    row_sets
        .into_iter()
        .map(|rows| Draw {
            rows,
            weights: randomized.map(|lo| (0..p).map(|_| rng.gen_range(lo..=1.0)).collect()),
        })
        .collect()
}

/// Standardized rows, response and penalty of one resample.
type Prepared = (DMatrix<f64>, DVector<f64>, PenaltySpec);

/// Standardized data and penalty for one resample; `None` if a column is
/// constant on it.
fn prepare(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    d: &Draw,
    penalty: &PenaltySpec,
) -> Result<Option<Prepared>, IdentifyError> {
    let xs = x.select_rows(d.rows.iter());
    let ys = DVector::from_iterator(d.rows.len(), d.rows.iter().map(|&i| y[i]));
    let Ok((xs, ys)) = standardize_xy(&xs, &ys) else {
        return Ok(None);
    };
    let pen = match &d.weights {
        Some(w) => penalty.clone().with_weights(w.clone())?,
        None => penalty.clone(),
    };
    Ok(Some((xs, ys, pen)))
}

/// Running counts `p × G` plus the number of resamples behind each column.
#[derive(Clone, Debug)]
struct Counts {
    hits: Vec<Vec<u32>>,
    used: Vec<u32>,
    dropped: usize,
}

impl Counts {
    fn new(p: usize, g: usize) -> Self {
        Self {
            hits: vec![vec![0; g]; p],
            used: vec![0; g],
            dropped: 0,
        }
    }

    fn merge(mut self, other: Counts) -> Self {
        for (a, b) in self.hits.iter_mut().zip(other.hits) {
            a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
        }
        self.used.iter_mut().zip(other.used).for_each(|(u, v)| *u += v);
        self.dropped += other.dropped;
        self
    }

    fn add_support(&mut self, g: usize, support: &[usize]) {
        self.used[g] += 1;
        for &j in support {
            self.hits[j][g] += 1;
        }
    }

    fn into_profile(self, method: String, grid: Vec<f64>, resamples: usize, aggregate: fn(&[f64]) -> f64) -> FrequencyProfile {
        let freq: Vec<Vec<f64>> = self
            .hits
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.used)
                    .map(|(&h, &u)| if u == 0 { 0.0 } else { h as f64 / u as f64 })
                    .collect()
            })
            .collect();
        let score = freq.iter().map(|r| aggregate(r)).collect();
        let mut flags = Vec::new();
        if self.dropped > 0 {
            flags.push(format!("resample-degenerate:{}", self.dropped));
        }
        FrequencyProfile {
            method,
            grid,
            freq,
            score,
            resamples,
            dropped: self.dropped,
            flags,
        }
    }
}

fn max_of(r: &[f64]) -> f64 {
    r.iter().copied().fold(0.0, f64::max)
}

fn mean_of(r: &[f64]) -> f64 {
    if r.is_empty() {
        0.0
    } else {
        r.iter().sum::<f64>() / r.len() as f64
    }
}

fn path_or_empty(r: Result<RegularizationPath, RegPathError>) -> Result<Option<RegularizationPath>, IdentifyError> {
    match r {
        Ok(p) => Ok(Some(p)),
        Err(RegPathError::AllZeroCorrelation) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Per-variable hit counts by grid point, resamples used per grid point,
/// and resamples dropped.
pub(crate) type Tally = (Vec<Vec<u32>>, Vec<u32>, usize);

/// Counts for pre-drawn resamples, each followed along `grid`.
pub(crate) fn shared_counts(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    draws: &[Draw],
    penalty: &PenaltySpec,
    algorithm: Algorithm,
    grid: &[f64],
    cd: &CdOptions,
) -> Result<Tally, IdentifyError> {
    let p = x.ncols();
    let parts = map_indexed(draws.len(), |i| -> Result<Counts, IdentifyError> {
        let mut c = Counts::new(p, grid.len());
        let Some((xs, ys, pen)) = prepare(x, y, &draws[i], penalty)? else {
            c.dropped = 1;
            return Ok(c);
        };
        let path = match algorithm {
            Algorithm::Lars => path_or_empty(lars_path(&xs, &ys, &pen, &LarsOptions::default()))?,
            Algorithm::GradientDescent => Some(cd_path_on_grid(&xs, &ys, &pen, grid, cd)?),
        };
        for (g, &lam) in grid.iter().enumerate() {
            c.add_support(g, path.as_ref().map_or(&[][..], |pt| pt.support_at(lam)));
        }
        Ok(c)
    });
    let total = parts
        .into_iter()
        .try_fold(Counts::new(p, grid.len()), |acc, c| c.map(|c| acc.merge(c)))?;
    Ok((total.hits, total.used, total.dropped))
}

/// Selection frequency of every variable at every grid `λ` across
/// resamples of the rows of `(x, y)`. The aggregated score is the maximum
/// frequency over the grid.
pub fn resample_frequencies(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    plan: &ResamplePlan,
    penalty: &PenaltySpec,
    grid: &[f64],
    rng: &RngStream,
) -> Result<FrequencyProfile, IdentifyError> {
    plan.validate()?;
    penalty.validate(x.ncols())?;
    if grid.is_empty() {
        return Err(IdentifyError::InvalidOption("empty grid".into()));
    }
    let (n, p) = x.shape();
    let weights = plan.randomized.then_some(plan.weight_low);
    let counts = match plan.grid_mode {
        GridMode::SharedSamples => {
            let draws: Vec<Draw> = (0..plan.count)
                .flat_map(|b| draw(plan.scheme, n, p, weights, &mut rng.derive(b as u64)))
                .collect();
            let (hits, used, dropped) = shared_counts(x, y, &draws, penalty, plan.algorithm, grid, &plan.cd)?;
            Counts { hits, used, dropped }
        }
        GridMode::PerLambda => {
            let parts = map_indexed(plan.count, |b| -> Result<Counts, IdentifyError> {
                let chain = rng.derive(b as u64);
                let mut c = Counts::new(p, grid.len());
                let mut warm: Vec<Option<Vec<f64>>> = vec![None; 2];
                for (g, &lam) in grid.iter().enumerate() {
                    let draws = draw(plan.scheme, n, p, weights, &mut chain.derive(g as u64));
                    for (h, d) in draws.iter().enumerate() {
                        let Some((xs, ys, pen)) = prepare(x, y, d, penalty)? else {
                            c.dropped += 1;
                            continue;
                        };
                        let sol = cd_solve(&xs, &ys, &pen, lam, warm[h].as_deref(), &plan.cd)?;
                        let support: Vec<usize> = (0..p).filter(|&j| sol.beta[j] != 0.0).collect();
                        c.add_support(g, &support);
                        warm[h] = Some(sol.beta);
                    }
                }
                Ok(c)
            });
            parts
                .into_iter()
                .try_fold(Counts::new(p, grid.len()), |acc, c| c.map(|c| acc.merge(c)))?
        }
    };
    let per_draw = if plan.scheme == Scheme::HalfSubsample { 2 } else { 1 };
    Ok(counts.into_profile(plan.label(), grid.to_vec(), plan.count * per_draw, max_of))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TigressOptions {
    /// Random half splits; each contributes both halves.
    pub splits: usize,
    pub steps: usize,
    pub weight_low: f64,
}

impl Default for TigressOptions {
    fn default() -> Self {
        Self {
            splits: 100,
            steps: 50,
            weight_low: 0.2,
        }
    }
}

/// Randomized-lasso LARS on half subsamples; `freq[j][s]` is the fraction
/// of resamples with `j` active after step `s + 1`, and the score is the
/// mean over steps.
pub fn tigress_score(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    opts: &TigressOptions,
    rng: &RngStream,
) -> Result<FrequencyProfile, IdentifyError> {
    if opts.steps == 0 || opts.splits == 0 {
        return Err(IdentifyError::InvalidOption("tigress needs ≥ 1 split and ≥ 1 step".into()));
    }
    let (n, p) = x.shape();
    let draws: Vec<Draw> = (0..opts.splits)
        .flat_map(|b| draw(Scheme::HalfSubsample, n, p, Some(opts.weight_low), &mut rng.derive(b as u64)))
        .collect();
    let lasso = PenaltySpec::lasso();
    let parts = map_indexed(draws.len(), |i| -> Result<Counts, IdentifyError> {
        let mut c = Counts::new(p, opts.steps);
        let Some((xs, ys, pen)) = prepare(x, y, &draws[i], &lasso)? else {
            c.dropped = 1;
            return Ok(c);
        };
        let path = path_or_empty(lars_path(&xs, &ys, &pen, &LarsOptions::steps(opts.steps)))?;
        let supports = path.map(|pt| pt.supports).unwrap_or_default();
        for s in 0..opts.steps {
            let sup = supports.get(s).or(supports.last()).map_or(&[][..], Vec::as_slice);
            c.add_support(s, sup);
        }
        Ok(c)
    });
    let counts = parts
        .into_iter()
        .try_fold(Counts::new(p, opts.steps), |acc, c| c.map(|c| acc.merge(c)))?;
    let grid = (1..=opts.steps).map(|s| s as f64).collect();
    Ok(counts.into_profile("tigress".into(), grid, 2 * opts.splits, mean_of))
}
