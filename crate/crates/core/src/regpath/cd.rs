use nalgebra::{DMatrix, DVector};

use super::{check_dims, lambda_max, Algorithm, PathMeta, PenaltySpec, RegPathError, RegularizationPath, Ridge};

#[derive(Clone, Debug, PartialEq)]
pub struct CdOptions {
    pub grid_size: usize,
    pub eps_ratio: f64,
    /// A sweep has converged once every coordinate update lowered the
    /// loss by less than `tol · ‖y‖²/n`, i.e. `vⱼ Δβⱼ² < tol · ‖y‖²/n`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Stop the grid once the fit explains 99.9% of the variance or the
    /// support outgrows `n − 1`.
    pub early_stop: bool,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            grid_size: 1000,
            eps_ratio: 1e-3,
            tol: 1e-7,
            max_sweeps: 100_000,
            early_stop: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdSolution {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after each sweep.
    pub trace: Vec<f64>,
}

struct Solver<'a> {
    x: &'a DMatrix<f64>,
    pen: &'a PenaltySpec,
    n: f64,
    /// ‖xⱼ‖²/n
    v: Vec<f64>,
    beta: Vec<f64>,
    resid: DVector<f64>,
    /// ‖y‖²/n, the unit of the convergence threshold.
    scale: f64,
}

#[inline]
fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

impl<'a> Solver<'a> {
    fn new(x: &'a DMatrix<f64>, y: &DVector<f64>, pen: &'a PenaltySpec) -> Self {
        let n = x.nrows() as f64;
        let v = x.column_iter().map(|c| c.norm_squared() / n).collect();
        let yy = y.norm_squared() / n;
        Self {
            x,
            pen,
            n,
            v,
            beta: vec![0.0; x.ncols()],
            resid: y.clone(),
            scale: if yy > 0.0 { yy } else { 1.0 },
        }
    }

    fn update(&mut self, j: usize, l1: f64, mu: f64) -> f64 {
        let col = self.x.column(j);
        let old = self.beta[j];
        let z = col.dot(&self.resid) / self.n + self.v[j] * old;
        let new = soft(z, l1 / self.pen.weight(j)) / (self.v[j] + 2.0 * mu);
        if new != old {
            self.resid.axpy(old - new, &col, 1.0);
            self.beta[j] = new;
        }
        self.v[j] * (new - old).powi(2)
    }

    fn objective(&self, l1: f64, mu: f64) -> f64 {
        let pen: f64 = self
            .beta
            .iter()
            .enumerate()
            .map(|(j, b)| l1 * b.abs() / self.pen.weight(j) + mu * b * b)
            .sum();
        self.resid.norm_squared() / (2.0 * self.n) + pen
    }

    /// Active-set cycling: sweep the nonzero coordinates to convergence,
    /// then confirm with a full sweep.
    fn solve(&mut self, lambda: f64, tol: f64, max_sweeps: usize, mut trace: Option<&mut Vec<f64>>) -> (usize, bool) {
        let l1 = lambda * self.pen.l1_factor();
        let mu = lambda * self.pen.alpha;
        let p = self.beta.len();
        let tol = tol * self.scale;
        let mut sweeps = 0;
        loop {
            let mut chg = 0.0_f64;
            for j in 0..p {
                chg = chg.max(self.update(j, l1, mu));
            }
            sweeps += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(self.objective(l1, mu));
            }
            if chg < tol {
                return (sweeps, true);
            }
            if sweeps >= max_sweeps {
                return (sweeps, false);
            }
            let act: Vec<usize> = (0..p).filter(|&j| self.beta[j] != 0.0).collect();
            loop {
                let mut chg = 0.0_f64;
                for &j in &act {
                    chg = chg.max(self.update(j, l1, mu));
                }
                sweeps += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(self.objective(l1, mu));
                }
                if chg < tol {
                    break;
                }
                if sweeps >= max_sweeps {
                    return (sweeps, false);
                }
            }
        }
    }
}

/// Minimize the objective at a single `λ` (ridge weight `αλ`) from `warm`.
pub fn cd_solve(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    lambda: f64,
    warm: Option<&[f64]>,
    opts: &CdOptions,
) -> Result<CdSolution, RegPathError> {
    check_dims(x, y)?;
    penalty.validate(x.ncols())?;
    let mut s = Solver::new(x, y, penalty);
    if let Some(w) = warm {
        if w.len() != x.ncols() {
            return Err(RegPathError::InvalidOption("warm start length".into()));
        }
        s.beta.copy_from_slice(w);
        s.resid = y - x * DVector::from_column_slice(w);
    }
    let mut trace = Vec::new();
    let (sweeps, converged) = s.solve(lambda, opts.tol, opts.max_sweeps, Some(&mut trace));
    Ok(CdSolution {
        beta: s.beta,
        sweeps,
        converged,
        trace,
    })
}

/// Geometric grid of `size` points from `top` down to `eps · top`.
pub fn geometric_grid(top: f64, eps: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![top];
    }
    let step = eps.ln() / (size - 1) as f64;
    (0..size).map(|k| top * (step * k as f64).exp()).collect()
}

/// Warm-started coordinate descent along a geometric grid from `λ_max`.
/// Leading grid points with an empty support are not stored.
pub fn cd_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    opts: &CdOptions,
) -> Result<RegularizationPath, RegPathError> {
    if opts.grid_size < 2 || !(opts.eps_ratio > 0.0 && opts.eps_ratio < 1.0) {
        return Err(RegPathError::InvalidOption(format!(
            "grid-size {} / eps-ratio {}",
            opts.grid_size, opts.eps_ratio
        )));
    }
    let lm = lambda_max(x, y, penalty)?;
    let grid = geometric_grid(lm, opts.eps_ratio, opts.grid_size);
    let mut path = cd_path_on_grid(x, y, penalty, &grid, opts)?;
    let lead = path.supports.iter().take_while(|s| s.is_empty()).count();
    path.lambdas.drain(..lead);
    path.supports.drain(..lead);
    path.coefs.drain(..lead);
    path.meta.nonconverged = path
        .meta
        .nonconverged
        .iter()
        .filter(|&&k| k >= lead)
        .map(|k| k - lead)
        .collect();
    Ok(path)
}

/// Coordinate descent on a caller-supplied decreasing grid; every point
/// is stored, including empty supports.
pub fn cd_path_on_grid(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: &PenaltySpec,
    grid: &[f64],
    opts: &CdOptions,
) -> Result<RegularizationPath, RegPathError> {
    check_dims(x, y)?;
    penalty.validate(x.ncols())?;
    if grid.windows(2).any(|w| w[1] >= w[0]) || grid.iter().any(|l| !(*l > 0.0)) {
        return Err(RegPathError::InvalidOption("grid must be positive and strictly decreasing".into()));
    }
    let n = x.nrows();
    let yy = y.norm_squared();
    let mut s = Solver::new(x, y, penalty);
    let mut meta = PathMeta::default();
    let (mut lambdas, mut supports, mut coefs) = (Vec::new(), Vec::new(), Vec::new());
    for (k, &lam) in grid.iter().enumerate() {
        let (_, ok) = s.solve(lam, opts.tol, opts.max_sweeps, None);
        if !ok {
            meta.nonconverged.push(k);
            log::warn!("coordinate descent hit {} sweeps at λ = {lam:e}", opts.max_sweeps);
        }
        let support: Vec<usize> = (0..s.beta.len()).filter(|&j| s.beta[j] != 0.0).collect();
        let big = support.len() > n.saturating_sub(1);
        lambdas.push(lam);
        supports.push(support);
        coefs.push(s.beta.clone());
        if opts.early_stop && k + 1 < grid.len() && (big || s.resid.norm_squared() <= 1e-3 * yy) {
            meta.truncated = true;
            break;
        }
    }
    Ok(RegularizationPath {
        algorithm: Algorithm::GradientDescent,
        penalty: penalty.clone(),
        ridge: Ridge::Proportional,
        lambdas,
        supports,
        coefs,
        tail: None,
        meta,
    })
}
