//! Simulation study orchestration: configuration, per-replicate execution
//! of every method, aggregation with significance marks, and emission of
//! tables, the JSON report and plots.

mod aggregate;
mod emit;
mod method;
mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::CutoffMode;
use crate::simgen::{Design, DesignSpec};

pub use aggregate::{aggregate, AggCell, Metric, ReferenceCell};
pub use emit::{emit, read_report, read_table, render_markdown, EmitOptions, REPORT_SCHEMA};
pub use method::{parse_methods, Method, Rule};
pub use run::{run_benchmark, BenchReport, CellRecord, ConfigEcho, Failure, MetricRow, RunOptions};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("config parse: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot: {0}")]
    Plot(String),
}

/// Tuning constants of the methods under study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct MethodParams {
    /// Elastic-net mixing weight.
    pub alpha: f64,
    pub ebic_delta: f64,
    pub plateau_fraction: f64,
    /// LARS step limit; `None` means `50 · min(p, n − 1)`.
    pub lars_max_steps: Option<usize>,
    pub cd_grid: usize,
    pub cd_eps: f64,
    /// Draws for Bolasso and Stability Selection on shared samples.
    pub resamples: usize,
    pub threshold: f64,
    pub weight_low: f64,
    /// Grid on which shared-sample frequencies are read off.
    pub frequency_grid: usize,
    pub frequency_eps: f64,
    pub per_lambda_grid: usize,
    pub per_lambda_resamples: usize,
    pub tigress_splits: usize,
    pub tigress_steps: usize,
    pub tigress_weight_low: f64,
    pub knockoff_q: f64,
    pub knockoff_grid: usize,
    pub escv_folds: usize,
    pub escv_grid: usize,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            ebic_delta: 1.0,
            plateau_fraction: 0.1,
            lars_max_steps: None,
            cd_grid: 1000,
            cd_eps: 1e-3,
            resamples: 100,
            threshold: 0.6,
            weight_low: 0.5,
            frequency_grid: 100,
            frequency_eps: 1e-3,
            per_lambda_grid: 20,
            per_lambda_resamples: 50,
            tigress_splits: 100,
            tigress_steps: 50,
            tigress_weight_low: 0.2,
            knockoff_q: 0.1,
            knockoff_grid: 500,
            escv_folds: 10,
            escv_grid: 100,
        }
    }
}

/// A full study description, read from TOML with kebab-case keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct BenchConfig {
    pub designs: Vec<DesignSpec>,
    /// Method names; `all` expands to every combination.
    pub methods: Vec<String>,
    pub replicates: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub cutoff_mode: CutoffMode,
    #[serde(default)]
    pub params: MethodParams,
}

impl BenchConfig {
    /// Six designs at n = 150, p = 200, every method, 40 replicates.
    pub fn full() -> Self {
        Self {
            designs: Design::ALL.iter().map(|&d| DesignSpec::new(d, 150, 200)).collect(),
            methods: vec!["all".into()],
            replicates: 40,
            master_seed: 2021,
            output_dir: PathBuf::from("bench-out"),
            cutoff_mode: CutoffMode::MinMaxX,
            params: MethodParams::default(),
        }
    }

    /// Small profile for smoke runs: n = 60, p = 40, 8 replicates.
    pub fn quick() -> Self {
        Self {
            designs: Design::ALL.iter().map(|&d| DesignSpec::new(d, 60, 40)).collect(),
            replicates: 8,
            ..Self::full()
        }
    }

    /// Shrink to the quick profile while keeping the chosen designs and
    /// methods.
    pub fn make_quick(&mut self) {
        for d in &mut self.designs {
            d.n = 60;
            d.p = 40;
        }
        self.replicates = 8;
    }

    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: BenchConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.designs.is_empty() {
            return Err(BenchError::InvalidConfig("no designs".into()));
        }
        if self.replicates < 2 {
            return Err(BenchError::InvalidConfig("t-tests need at least 2 replicates".into()));
        }
        for d in &self.designs {
            if d.n < 20 || d.p < 2 {
                return Err(BenchError::InvalidConfig(format!("{}: n = {}, p = {} too small", d.name, d.n, d.p)));
            }
        }
        let mut names: Vec<_> = self.designs.iter().map(|d| d.name).collect();
        names.sort();
        names.dedup();
        if names.len() != self.designs.len() {
            return Err(BenchError::InvalidConfig("duplicate design".into()));
        }
        if self.method_list()?.is_empty() {
            return Err(BenchError::InvalidConfig("no methods".into()));
        }
        Ok(())
    }

    pub fn method_list(&self) -> Result<Vec<Method>, BenchError> {
        parse_methods(&self.methods)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let cfg = BenchConfig::full();
        let back = BenchConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let text = r#"
            methods = ["gd+lasso+ebic", "tigress"]
            replicates = 3
            master-seed = 7
            output-dir = "x"
            cutoff-mode = "truth-size"
            [[designs]]
            name = "cluster"
            [params]
            resamples = 10
        "#;
        let c = BenchConfig::from_toml(text).unwrap();
        assert_eq!(c.designs[0].n, 150);
        assert_eq!(c.designs[0].blocks, 5);
        assert_eq!(c.params.resamples, 10);
        assert_eq!(c.params.threshold, 0.6);
        assert_eq!(c.method_list().unwrap().len(), 2);
        assert!(BenchConfig::from_toml(&text.replace("replicates = 3", "replicates = 1")).is_err());
        assert!(BenchConfig::from_toml(&text.replace("tigress", "nope")).is_err());
        assert!(BenchConfig::from_toml(&format!("{text}\nbogus = 1")).is_err());
    }

    #[test]
    fn quick_profile_shape() {
        let q = BenchConfig::quick();
        assert_eq!(q.replicates, 8);
        assert!(q.designs.iter().all(|d| d.n == 60 && d.p == 40));
        assert_eq!(q.method_list().unwrap().len(), 45);
    }
}
