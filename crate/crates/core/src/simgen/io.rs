use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Dataset, Design, SimError};

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct TruthFile {
    design: Design,
    /// 1-based column indices.
    support: Vec<usize>,
    beta0: Option<Vec<f64>>,
    noise_sd: Option<f64>,
    seed: u64,
    stream: u64,
    rows: Vec<usize>,
}

// 17 significant digits round-trip every f64
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `X.csv`, `y.csv` and `truth.json` into `dir`.
pub fn save_dataset(d: &Dataset, dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(dir.join("X.csv"))
        .map_err(|e| SimError::Format(e.to_string()))?;
    for i in 0..d.n() {
        w.write_record(d.x.row(i).iter().map(|&v| fmt(v)))
            .map_err(|e| SimError::Format(e.to_string()))?;
    }
    w.flush()?;
    let y: String = d.y.iter().map(|&v| fmt(v) + "\n").collect();
    fs::write(dir.join("y.csv"), y)?;
    let truth = TruthFile {
        design: d.design,
        support: d.truth.iter().map(|j| j + 1).collect(),
        beta0: d.beta0.clone(),
        noise_sd: d.noise_sd,
        seed: d.seed,
        stream: d.stream,
        rows: d.rows.clone(),
    };
    let json = serde_json::to_string_pretty(&truth).map_err(|e| SimError::Format(e.to_string()))?;
    fs::write(dir.join("truth.json"), json)?;
    Ok(())
}

fn parse(s: &str) -> Result<f64, SimError> {
    s.trim()
        .parse()
        .map_err(|_| SimError::Format(format!("not a number: '{s}'")))
}

/// Read a dataset written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset, SimError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(dir.join("X.csv"))
        .map_err(|e| SimError::Format(e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| SimError::Format(e.to_string()))?;
        rows.push(rec.iter().map(parse).collect::<Result<_, _>>()?);
    }
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(SimError::Format("ragged X.csv".into()));
    }
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let y: Vec<f64> = fs::read_to_string(dir.join("y.csv"))?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(parse)
        .collect::<Result<_, _>>()?;
    if y.len() != n {
        return Err(SimError::Format(format!("y.csv has {} rows, X.csv has {n}", y.len())));
    }
    let t: TruthFile = serde_json::from_str(&fs::read_to_string(dir.join("truth.json"))?)
        .map_err(|e| SimError::Format(e.to_string()))?;
    if t.support.iter().any(|&j| j == 0 || j > p) {
        return Err(SimError::Format("support index out of range".into()));
    }
    Ok(Dataset {
        design: t.design,
        x,
        y: DVector::from_vec(y),
        truth: t.support.iter().map(|j| j - 1).collect(),
        beta0: t.beta0,
        noise_sd: t.noise_sd,
        seed: t.seed,
        stream: t.stream,
        rows: t.rows,
    })
}
