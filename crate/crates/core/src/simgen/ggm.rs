use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Dataset, Design, ResponseMode, SimError};
use crate::numcore::{chol_factor, RngStream, SpdMatrix};

const EDGE_WEIGHT: f64 = 0.3;
const DIAG_MARGIN: f64 = 0.1;

/// Block sizes for `d` variables in `blocks` near-equal blocks; any
/// remainder goes to the last blocks, one extra variable each.
pub fn cluster_blocks(d: usize, blocks: usize) -> Vec<usize> {
    let small = d / blocks;
    let large = d % blocks;
    let mut sizes = vec![small; blocks - large];
    sizes.extend(std::iter::repeat_n(small + 1, large));
    sizes
}

/// Preferential-attachment tree on `d` nodes: start from one edge, then each
/// new node links to one existing node chosen with probability
/// proportional to its degree.
pub fn barabasi_albert(d: usize, rng: &mut RngStream) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(d.saturating_sub(1));
    if d < 2 {
        return edges;
    }
    edges.push((0, 1));
    // each edge endpoint appears once per unit of degree
    let mut ends: Vec<usize> = vec![0, 1];
    for i in 2..d {
        let j = ends[rng.gen_range(0..ends.len())];
        edges.push((j, i));
        ends.push(j);
        ends.push(i);
    }
    edges
}

/// Precision matrix with `±0.3` on each edge (random sign) and a diagonal
/// of absolute row sum plus `0.1`, which makes it diagonally dominant.
pub fn precision_from_edges(
    d: usize,
    edges: &[(usize, usize)],
    rng: &mut RngStream,
) -> Result<SpdMatrix, SimError> {
    let mut theta = DMatrix::<f64>::zeros(d, d);
    for &(a, b) in edges {
        let w = if rng.gen::<bool>() { EDGE_WEIGHT } else { -EDGE_WEIGHT };
        theta[(a, b)] = w;
        theta[(b, a)] = w;
    }
    let row_abs: Vec<f64> = (0..d).map(|i| theta.row(i).iter().map(|v| v.abs()).sum()).collect();
    for attempt in 0..8 {
        for (i, &r) in row_abs.iter().enumerate() {
            theta[(i, i)] = r + DIAG_MARGIN * (1 + attempt) as f64;
        }
        if let Ok(spd) = SpdMatrix::new(theta.clone()) {
            return Ok(spd);
        }
    }
    Err(SimError::PrecisionNotPD(8))
}

/// Draw `m` rows from `N(0, Θ⁻¹)`.
pub fn sample_gaussian(theta: &SpdMatrix, m: usize, rng: &mut RngStream) -> Result<DMatrix<f64>, SimError> {
    let d = theta.dim();
    // Θ = L Lᵀ, x = L⁻ᵀ z has covariance Θ⁻¹; row form X = Z L⁻¹
    let l = chol_factor(theta)?;
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(d, d))
        .ok_or(SimError::PrecisionNotPD(0))?;
    let z = DMatrix::from_fn(m, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(z * l_inv)
}

/// Population regression of one GGM variable on all others.
#[derive(Clone, Debug, PartialEq)]
pub struct GgmRegression {
    /// Coefficients indexed by the remaining columns (response removed).
    pub beta0: Vec<f64>,
    pub noise_sd: f64,
    /// Nonzero pattern of the response row of Θ, as remaining-column indices.
    pub support: Vec<usize>,
}

pub fn ggm_regression(theta: &DMatrix<f64>, response: usize) -> GgmRegression {
    let d = theta.nrows();
    let trr = theta[(response, response)];
    let mut beta0 = Vec::with_capacity(d - 1);
    let mut support = Vec::new();
    for j in (0..d).filter(|&j| j != response) {
        let col = beta0.len();
        let t = theta[(response, j)];
        beta0.push(-t / trr);
        if t != 0.0 {
            support.push(col);
        }
    }
    GgmRegression {
        beta0,
        noise_sd: trr.powf(-0.5),
        support,
    }
}

fn assemble(
    design: Design,
    theta: &SpdMatrix,
    response: usize,
    n: usize,
    rng: &mut RngStream,
) -> Result<Dataset, SimError> {
    let m = 2 * n;
    let sample = sample_gaussian(theta, m, rng)?;
    let reg = ggm_regression(theta.as_matrix(), response);
    let d = theta.dim();
    let keep: Vec<usize> = (0..d).filter(|&j| j != response).collect();
    let x = sample.select_columns(keep.iter());
    let y = DVector::from_iterator(m, sample.column(response).iter().copied());
    Ok(Dataset {
        design,
        x,
        y,
        truth: reg.support,
        beta0: Some(reg.beta0),
        noise_sd: Some(reg.noise_sd),
        seed: rng.seed(),
        stream: rng.stream(),
        rows: (0..m).collect(),
    })
}

/// Block-diagonal graphical model on `p + 1` variables; the response is
/// the first variable.
pub fn gen_cluster_ggm(
    n: usize,
    p: usize,
    blocks: usize,
    connect_prob: f64,
    rng: &mut RngStream,
) -> Result<Dataset, SimError> {
    let d = p + 1;
    if blocks == 0 || blocks > d || !(connect_prob > 0.0 && connect_prob < 1.0) || n < 2 {
        return Err(SimError::InvalidParameter(format!(
            "blocks={blocks}, connect_prob={connect_prob}, n={n}, p={p}"
        )));
    }
    let mut edges = Vec::new();
    let mut start = 0;
    for size in cluster_blocks(d, blocks) {
        for a in start..start + size {
            for b in (a + 1)..start + size {
                if rng.gen::<f64>() < connect_prob {
                    edges.push((a, b));
                }
            }
        }
        start += size;
    }
    let theta = precision_from_edges(d, &edges, rng)?;
    assemble(Design::Cluster, &theta, 0, n, rng)
}

fn pick_by_degree(degree: &[usize], mode: ResponseMode) -> usize {
    // first index wins ties
    let mut best = 0;
    for (i, &k) in degree.iter().enumerate() {
        let better = match mode {
            ResponseMode::Max => k > degree[best],
            ResponseMode::Min => k < degree[best],
        };
        if better {
            best = i;
        }
    }
    best
}

/// Scale-free graphical model on `p + 1` variables; the response is the
/// node of largest (or smallest) degree.
pub fn gen_scalefree_ggm(
    n: usize,
    p: usize,
    mode: ResponseMode,
    rng: &mut RngStream,
) -> Result<Dataset, SimError> {
    if p < 3 || n < 2 {
        return Err(SimError::InvalidParameter(format!("n={n}, p={p}")));
    }
    let d = p + 1;
    let edges = barabasi_albert(d, rng);
    let mut degree = vec![0usize; d];
    for &(a, b) in &edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    let response = pick_by_degree(&degree, mode);
    let theta = precision_from_edges(d, &edges, rng)?;
    let design = match mode {
        ResponseMode::Max => Design::ScalefreeMax,
        ResponseMode::Min => Design::ScalefreeMin,
    };
    assemble(design, &theta, response, n, rng)
}

pub(super) fn degree_pick(degree: &[usize], mode: ResponseMode) -> usize {
    pick_by_degree(degree, mode)
}
