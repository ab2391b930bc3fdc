use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use crate::numcore::{f_sf, log_binom, NumError};
use crate::regpath::RefitModel;

use super::{argmin_total, CriterionValue, SelectError, SelectionResult};

/// `(1/D) E[(χ²_D − x χ²_N / N)₊]` through central F tails:
/// `P(F_{D+2,N} > x/(D+2)) − (x/D) P(F_{D,N+2} > x(N+2)/(ND))`.
pub fn phi(d: usize, n: usize, x: f64) -> Result<f64, NumError> {
    if d == 0 || n == 0 || !(x >= 0.0) {
        return Err(NumError::DomainError(format!("phi(D={d}, N={n}, x={x})")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let (df, nf) = (d as f64, n as f64);
    let a = f_sf(df + 2.0, nf, x / (df + 2.0));
    let b = f_sf(df, nf + 2.0, x * (nf + 2.0) / (nf * df));
    Ok((a - x / df * b).max(0.0))
}

/// Cache of `Ψ(D, N, q)` safe for concurrent use.
#[derive(Debug, Default)]
pub struct PsiTable {
    cache: RwLock<HashMap<(usize, usize, u64), f64>>,
}

impl PsiTable {
    pub fn global() -> &'static PsiTable {
        static TABLE: OnceLock<PsiTable> = OnceLock::new();
        TABLE.get_or_init(PsiTable::default)
    }

    pub fn get(&self, d: usize, n: usize, q: f64) -> Result<f64, SelectError> {
        let key = (d, n, q.to_bits());
        if let Some(v) = self.cache.read().expect("psi cache").get(&key) {
            return Ok(*v);
        }
        let v = solve_psi(d, n, q)?;
        self.cache.write().expect("psi cache").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.cache.read().expect("psi cache").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn solve_psi(d: usize, n: usize, q: f64) -> Result<f64, SelectError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(NumError::DomainError(format!("psi needs q in (0, 1], got {q}")).into());
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while phi(d, n, hi)? > q {
        hi *= 2.0;
        tries += 1;
        if tries > 1100 || !hi.is_finite() {
            return Err(SelectError::BracketFailure { d, n, q });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(d, n, mid)? > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Solution `x` of `φ(D, N, x) = q`, memoized in the global table.
pub fn psi(d: usize, n: usize, q: f64) -> Result<f64, SelectError> {
    PsiTable::global().get(d, n, q)
}

/// LinSelect: minimize `rss · (1 + pen/(n − D))` with
/// `pen = 1.1 (n−D)/(n−D−1) Ψ(D+1, n−D−1, e^{−L})` and
/// `L = ln C(p, D) + 2 ln(D + 2)`. Models with `D > n − 2` are skipped.
pub fn linselect_select(models: &[RefitModel], n: usize, p: usize) -> Result<SelectionResult, SelectError> {
    if models.is_empty() {
        return Err(SelectError::EmptyCollection);
    }
    let mut trace = Vec::with_capacity(models.len());
    let mut totals = Vec::with_capacity(models.len());
    let mut skipped = 0;
    for (i, m) in models.iter().enumerate() {
        let d = m.dimension;
        if d + 2 > n {
            skipped += 1;
            totals.push(f64::INFINITY);
            continue;
        }
        let weight = log_binom(p as u64, d as u64)? + 2.0 * ((d + 2) as f64).ln();
        let (nd, nd1) = ((n - d) as f64, (n - d - 1) as f64);
        let pen = 1.1 * nd / nd1 * psi(d + 1, n - d - 1, (-weight).exp())?;
        let total = m.rss * (1.0 + pen / nd);
        totals.push(total);
        trace.push(CriterionValue {
            model_id: i,
            dimension: d,
            loss: m.rss,
            penalty: total - m.rss,
            total,
        });
    }
    let best = argmin_total(models, &totals).ok_or(SelectError::EmptyCollection)?;
    let mut r = SelectionResult::from_model("linselect", &models[best], trace);
    if skipped > 0 {
        r.flags.push(format!("skipped-{skipped}-too-large"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelselect::testutil::model;
    use crate::numcore::RngStream;
    use rand::Rng;
    use rand_distr::{ChiSquared, Distribution};

    fn monte_carlo(d: usize, n: usize, x: f64, draws: usize, seed: u64) -> (f64, f64) {
        let mut rng = RngStream::new(seed, 0);
        let cd = ChiSquared::new(d as f64).unwrap();
        let cn = ChiSquared::new(n as f64).unwrap();
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let v = (cd.sample(&mut rng) - x * cn.sample(&mut rng) / n as f64).max(0.0) / d as f64;
            s += v;
            s2 += v * v;
        }
        let m = s / draws as f64;
        let sd = (s2 / draws as f64 - m * m).sqrt();
        (m, sd / (draws as f64).sqrt())
    }

    #[test]
    fn phi_at_zero_is_one() {
        assert_eq!(phi(4, 10, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn phi_decreasing_to_zero() {
        let xs: Vec<f64> = (0..200).map(|i| 0.25 * i as f64).collect();
        let v: Vec<f64> = xs.iter().map(|&x| phi(3, 20, x).unwrap()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(phi(3, 20, 1e4).unwrap() < 1e-12);
    }

    #[test]
    fn phi_matches_monte_carlo() {
        let (m, se) = monte_carlo(3, 20, 5.0, 10_000_000, 42);
        let v = phi(3, 20, 5.0).unwrap();
        assert!((v - m).abs() < 3.0 * se, "{v} vs {m} ± {se}");
    }

    #[test]
    fn psi_round_trip_and_monotone() {
        let mut rng = RngStream::new(3, 0);
        for _ in 0..50 {
            let d = rng.gen_range(1..60);
            let n = rng.gen_range(1..150);
            let q = rng.gen_range(1e-9..1.0f64);
            let x = psi(d, n, q).unwrap();
            assert!((phi(d, n, x).unwrap() - q).abs() < 1e-6);
        }
        let qs = [0.9, 0.5, 0.1, 1e-3, 1e-8, 1e-30];
        let xs: Vec<f64> = qs.iter().map(|&q| psi(5, 40, q).unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(psi(5, 40, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn psi_table_is_shared_and_memoized() {
        let t = PsiTable::default();
        let a = t.get(7, 30, 0.01).unwrap();
        assert_eq!(t.len(), 1);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| assert_eq!(t.get(7, 30, 0.01).unwrap(), a));
            }
        });
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn empty_only_collection() {
        let ms = vec![model(vec![], 100.0, 50)];
        assert!(linselect_select(&ms, 50, 10).unwrap().support.is_empty());
    }

    #[test]
    fn prefers_strong_signal_and_skips_saturated() {
        let ms = vec![
            model(vec![], 100.0, 50),
            model(vec![0], 30.0, 50),
            model(vec![0, 1], 29.5, 50),
            model((0..49).collect(), 0.1, 50),
        ];
        let r = linselect_select(&ms, 50, 60).unwrap();
        assert_eq!(r.support, vec![0]);
        assert_eq!(r.flags, vec!["skipped-1-too-large".to_string()]);
    }
}
