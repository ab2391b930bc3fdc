use nalgebra::{DMatrix, SymmetricEigen};

use super::NumError;

const SYM_RTOL: f64 = 1e-12;

/// Dense symmetric positive-definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, NumError> {
        check_symmetric(&m)?;
        chol_lower(&m)?;
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            scale = scale.max(m[(i, j)].abs());
            if i < j {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
    }
    (worst, scale)
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<(), NumError> {
    if m.nrows() != m.ncols() {
        return Err(NumError::NotSquare(m.nrows(), m.ncols()));
    }
    let (worst, scale) = max_asymmetry(m);
    if worst > SYM_RTOL * scale.max(f64::MIN_POSITIVE) {
        return Err(NumError::NonSymmetric(worst));
    }
    Ok(())
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    check_symmetric(m).is_ok()
}

fn chol_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>, NumError> {
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(NumError::NotPositiveDefinite { row: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Lower-triangular `L` with `L Lᵀ = m`.
pub fn chol_factor(m: &SpdMatrix) -> Result<DMatrix<f64>, NumError> {
    chol_lower(&m.0)
}

/// Smallest eigenvalue of a symmetric matrix (full decomposition).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> Result<f64, NumError> {
    check_symmetric(m)?;
    if m.nrows() == 0 {
        return Err(NumError::DomainError("empty matrix".into()));
    }
    let eig = SymmetricEigen::new(m.clone());
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `XᵀX`, symmetrized exactly.
pub fn gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let g = x.tr_mul(x);
    (&g + g.transpose()) * 0.5
}
