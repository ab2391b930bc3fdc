//! Cholesky factor of an active-set Gram matrix with rank-one growth and
//! Givens-based column removal.

#[derive(Clone, Debug, Default)]
pub(crate) struct GrowingCholesky {
    /// Row-major lower-triangular factor; row `i` holds `i + 1` entries.
    rows: Vec<Vec<f64>>,
}

impl GrowingCholesky {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Append a variable whose Gram row against the current set is `g` and
    /// whose diagonal entry is `d`. Returns `false` (unchanged) if the new
    /// column is numerically dependent.
    pub fn push(&mut self, g: &[f64], d: f64) -> bool {
        let k = self.len();
        debug_assert_eq!(g.len(), k);
        let mut l = vec![0.0; k + 1];
        for i in 0..k {
            let row = &self.rows[i];
            let s: f64 = (0..i).map(|t| row[t] * l[t]).sum();
            l[i] = (g[i] - s) / row[i];
        }
        let ss: f64 = l[..k].iter().map(|v| v * v).sum();
        let piv = d - ss;
        if !(piv > 1e-10 * d.abs().max(1.0)) {
            return false;
        }
        l[k] = piv.sqrt();
        self.rows.push(l);
        true
    }

    /// Remove the variable at position `i`.
    pub fn remove(&mut self, i: usize) {
        // later rows keep one entry past their new diagonal; rotate it away
        self.rows.remove(i);
        let k = self.len();
        for q in i..k {
            let (a, b) = (self.rows[q][q], self.rows[q][q + 1]);
            let h = a.hypot(b);
            let (c, s) = (a / h, b / h);
            for t in q..k {
                let row = &mut self.rows[t];
                let (u, v) = (row[q], row[q + 1]);
                row[q] = c * u + s * v;
                row[q + 1] = -s * u + c * v;
            }
            self.rows[q].truncate(q + 1);
        }
    }

    /// Solve `L Lᵀ w = s`.
    pub fn solve(&self, s: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut z = vec![0.0; k];
        for i in 0..k {
            let row = &self.rows[i];
            let acc: f64 = (0..i).map(|t| row[t] * z[t]).sum();
            z[i] = (s[i] - acc) / row[i];
        }
        for i in (0..k).rev() {
            let acc: f64 = (i + 1..k).map(|t| self.rows[t][i] * z[t]).sum();
            z[i] = (z[i] - acc) / self.rows[i][i];
        }
        z
    }
}
