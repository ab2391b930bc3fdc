use std::collections::HashMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, AggCell, ReferenceCell};
use super::{BenchConfig, BenchError, Method, MethodParams, Rule};
use crate::identify::{
    escv_select, frequency_grid, knockoff_filter, resample_frequencies, threshold_select, tigress_score, EscvOptions,
    GridMode, KnockoffOptions, ResamplePlan, TigressOptions,
};
use crate::metrics::{
    common_cutoff, confusion, p_pr_auc, p_roc_auc, reference_pauc, test_mse, ConfusionSummary, CurveKind, CutoffMode,
    VariableRanking,
};
use crate::modelselect::{dimension_jump_select, ebic_select, linselect_select, slope_heuristic_select, SelectionResult};
use crate::numcore::RngStream;
use crate::par::map_indexed;
use crate::regpath::{
    cd_path, dedupe_collection, lars_path, Algorithm, CdOptions, LarsOptions, PenaltyKind, PenaltySpec, RefitModel,
    RegularizationPath,
};
use crate::simgen::{Dataset, Design, DesignSpec};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Reuse cells already on disk.
    pub resume: bool,
}

/// Everything kept about one (design, replicate, method) execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CellRecord {
    pub design: Design,
    pub replicate: usize,
    pub method: String,
    pub error: Option<String>,
    /// 1-based.
    pub support: Vec<usize>,
    pub beta: Vec<f64>,
    pub lambda: Option<f64>,
    pub flags: Vec<String>,
    pub mse: Option<f64>,
    pub confusion: Option<ConfusionSummary>,
    pub ranking: Vec<Option<f64>>,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct ReplicateInfo {
    design: Design,
    replicate: usize,
    n: usize,
    p: usize,
    /// 1-based.
    truth: Vec<usize>,
}

/// One line of the per-replicate metrics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MetricRow {
    pub design: Design,
    pub method: String,
    pub replicate: usize,
    pub mse: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub fdp: Option<f64>,
    pub proc_auc: Option<f64>,
    pub ppr_auc: Option<f64>,
    pub cutoff_mode: CutoffMode,
    pub cutoff: Option<f64>,
    pub pr_cutoff: Option<f64>,
    pub proc_auc_normalized: Option<f64>,
    pub ppr_auc_normalized: Option<f64>,
    pub reference_pauc: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Failure {
    pub design: Design,
    pub replicate: usize,
    pub method: String,
    pub error: String,
}

/// The parts of the configuration that determine the results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConfigEcho {
    pub designs: Vec<DesignSpec>,
    pub methods: Vec<String>,
    pub replicates: usize,
    pub master_seed: u64,
    pub cutoff_mode: CutoffMode,
    pub params: MethodParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchReport {
    pub schema: String,
    pub config: ConfigEcho,
    pub rows: Vec<MetricRow>,
    /// Aggregates keyed by metric name.
    pub tables: std::collections::BTreeMap<String, Vec<AggCell>>,
    pub reference: Vec<ReferenceCell>,
    pub failures: Vec<Failure>,
}

impl BenchReport {
    pub fn has_failures(&self) -> bool {
        !self.failures.is_empty()
    }
}

fn penalty(kind: PenaltyKind, prm: &MethodParams) -> Result<PenaltySpec, String> {
    match kind {
        PenaltyKind::Lasso => Ok(PenaltySpec::lasso()),
        PenaltyKind::ElasticNet => PenaltySpec::elastic_net(prm.alpha).map_err(|e| e.to_string()),
    }
}

struct PathBundle {
    models: Vec<RefitModel>,
    ranking: VariableRanking,
}

/// Training data of one replicate plus the paths shared by its methods.
struct Workspace<'a> {
    train: &'a Dataset,
    prm: &'a MethodParams,
    paths: HashMap<(Algorithm, PenaltyKind), Result<PathBundle, String>>,
}

impl<'a> Workspace<'a> {
    fn bundle(&mut self, key: (Algorithm, PenaltyKind)) -> Result<&PathBundle, String> {
        let (train, prm) = (self.train, self.prm);
        self.paths
            .entry(key)
            .or_insert_with(|| build_path(train, prm, key))
            .as_ref()
            .map_err(Clone::clone)
    }
}

fn build_path(d: &Dataset, prm: &MethodParams, (alg, kind): (Algorithm, PenaltyKind)) -> Result<PathBundle, String> {
    let pen = penalty(kind, prm)?;
    let path: RegularizationPath = match alg {
        Algorithm::Lars => lars_path(
            &d.x,
            &d.y,
            &pen,
            &LarsOptions {
                max_steps: prm.lars_max_steps,
                enet_ridge: None,
            },
        ),
        Algorithm::GradientDescent => cd_path(
            &d.x,
            &d.y,
            &pen,
            &CdOptions {
                grid_size: prm.cd_grid,
                eps_ratio: prm.cd_eps,
                ..CdOptions::default()
            },
        ),
    }
    .map_err(|e| e.to_string())?;
    let models = dedupe_collection(&path, &d.x, &d.y).map_err(|e| e.to_string())?;
    Ok(PathBundle {
        ranking: VariableRanking::from_path(&path, d.p()),
        models,
    })
}

fn execute(method: Method, ws: &mut Workspace, rng: &mut RngStream) -> Result<(SelectionResult, VariableRanking), String> {
    let (x, y) = (&ws.train.x, &ws.train.y);
    let (n, p) = (ws.train.n(), ws.train.p());
    let prm = ws.prm;
    let err = |e: &dyn std::fmt::Display| e.to_string();
    match method {
        Method::Select {
            algorithm,
            penalty: kind,
            rule,
        } => {
            let b = ws.bundle((algorithm, kind))?;
            let sel = match rule {
                Rule::Ebic => ebic_select(&b.models, n, p, prm.ebic_delta),
                Rule::Slope => slope_heuristic_select(&b.models, p, prm.plateau_fraction),
                Rule::DimJump => dimension_jump_select(&b.models, p),
                Rule::LinSelect => linselect_select(&b.models, n, p),
            }
            .map_err(|e| err(&e))?;
            Ok((sel, b.ranking.clone()))
        }
        Method::Resample {
            algorithm,
            penalty: kind,
            randomized,
            scheme,
            mode,
        } => {
            let pen = penalty(kind, prm)?;
            let (size, count) = match mode {
                GridMode::SharedSamples => (prm.frequency_grid, prm.resamples),
                GridMode::PerLambda => (prm.per_lambda_grid, prm.per_lambda_resamples),
            };
            let grid = frequency_grid(x, y, &pen, size, prm.frequency_eps).map_err(|e| err(&e))?;
            let plan = ResamplePlan {
                scheme,
                count,
                grid_mode: mode,
                randomized,
                weight_low: prm.weight_low,
                algorithm,
                cd: CdOptions::default(),
            };
            let prof = resample_frequencies(x, y, &plan, &pen, &grid, rng).map_err(|e| err(&e))?;
            let sel = threshold_select(&prof, prm.threshold, x, y).map_err(|e| err(&e))?;
            Ok((sel, VariableRanking::from_nonzero(&prof.score)))
        }
        Method::Tigress => {
            let opts = TigressOptions {
                splits: prm.tigress_splits,
                steps: prm.tigress_steps,
                weight_low: prm.tigress_weight_low,
            };
            let prof = tigress_score(x, y, &opts, rng).map_err(|e| err(&e))?;
            let sel = threshold_select(&prof, prm.threshold, x, y).map_err(|e| err(&e))?;
            Ok((sel, VariableRanking::from_nonzero(&prof.score)))
        }
        Method::Knockoffs { penalty: kind } => {
            let pen = penalty(kind, prm)?;
            let opts = KnockoffOptions {
                q: prm.knockoff_q,
                grid_size: prm.knockoff_grid,
                ..KnockoffOptions::default()
            };
            let (sel, stats) = knockoff_filter(x, y, &pen, &opts, rng).map_err(|e| err(&e))?;
            Ok((sel, VariableRanking::from_nonzero(&stats.w)))
        }
        Method::Escv { penalty: kind } => {
            let pen = penalty(kind, prm)?;
            let opts = EscvOptions {
                folds: prm.escv_folds,
                grid_size: prm.escv_grid,
                ..EscvOptions::default()
            };
            let sel = escv_select(x, y, &pen, &opts, rng).map_err(|e| err(&e))?;
            let ranking = ws.bundle((Algorithm::GradientDescent, kind))?.ranking.clone();
            Ok((sel, ranking))
        }
    }
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        format!("panic: {s}")
    } else if let Some(s) = p.downcast_ref::<String>() {
        format!("panic: {s}")
    } else {
        "panic".into()
    }
}

fn failed_cell(design: Design, replicate: usize, method: &str, error: String) -> CellRecord {
    CellRecord {
        design,
        replicate,
        method: method.to_string(),
        error: Some(error),
        support: vec![],
        beta: vec![],
        lambda: None,
        flags: vec![],
        mse: None,
        confusion: None,
        ranking: vec![],
        seconds: 0.0,
    }
}

/// Run one method on a replicate, never panicking.
fn run_cell(
    method: Method,
    replicate: usize,
    ws: &mut Workspace,
    test: &Dataset,
    truth: &[usize],
    root: &RngStream,
) -> CellRecord {
    let name = method.to_string();
    let design = ws.train.design;
    let mut rng = root.derive_named(&name);
    let start = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(|| execute(method, ws, &mut rng))).unwrap_or_else(|p| Err(panic_message(p)));
    let seconds = start.elapsed().as_secs_f64();
    match out {
        Ok((sel, ranking)) => {
            let mse = test_mse(&test.x, &test.y, &sel.support, &sel.beta).ok();
            CellRecord {
                design,
                replicate,
                method: name,
                error: None,
                support: sel.support.iter().map(|j| j + 1).collect(),
                beta: sel.beta,
                lambda: sel.lambda,
                flags: sel.flags,
                mse,
                confusion: Some(confusion(&sel.support, truth, ws.train.p())),
                ranking: ranking.scores,
                seconds,
            }
        }
        Err(e) => {
            log::warn!("{design} r{replicate} {name}: {e}");
            CellRecord {
                seconds,
                ..failed_cell(design, replicate, &name, e)
            }
        }
    }
}

fn unit_dir(out: &Path, design: Design, replicate: usize) -> PathBuf {
    out.join("cells").join(design.label()).join(format!("r{replicate:03}"))
}

fn cell_path(dir: &Path, method: &str) -> PathBuf {
    dir.join(format!("{method}.json"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchError> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(value)?)?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Execute every method of one (design, replicate) unit, persisting each
/// cell as it completes.
fn run_unit(
    cfg: &BenchConfig,
    spec: &DesignSpec,
    replicate: usize,
    methods: &[Method],
    opts: &RunOptions,
) -> Result<(ReplicateInfo, Vec<CellRecord>), BenchError> {
    let dir = unit_dir(&cfg.output_dir, spec.name, replicate);
    fs::create_dir_all(&dir)?;
    let info_path = dir.join("replicate.json");
    let mut cells: Vec<Option<CellRecord>> = methods
        .iter()
        .map(|m| {
            if !opts.resume {
                return None;
            }
            read_json::<CellRecord>(&cell_path(&dir, &m.to_string()))
                .filter(|c| c.design == spec.name && c.replicate == replicate && c.method == m.to_string())
        })
        .collect();
    let saved_info = if opts.resume { read_json::<ReplicateInfo>(&info_path) } else { None };
    if let (Some(info), true) = (&saved_info, cells.iter().all(Option::is_some)) {
        return Ok((info.clone(), cells.into_iter().flatten().collect()));
    }
    let pair = match spec.replicate(cfg.master_seed, replicate) {
        Ok(p) => p,
        Err(e) => {
            let info = ReplicateInfo {
                design: spec.name,
                replicate,
                n: spec.n,
                p: spec.p,
                truth: vec![],
            };
            let msg = format!("data: {e}");
            let failed = methods
                .iter()
                .map(|m| failed_cell(spec.name, replicate, &m.to_string(), msg.clone()))
                .collect();
            return Ok((info, failed));
        }
    };
    let info = ReplicateInfo {
        design: spec.name,
        replicate,
        n: pair.train.n(),
        p: pair.train.p(),
        truth: pair.train.truth.iter().map(|j| j + 1).collect(),
    };
    write_json(&info_path, &info)?;
    let train = pair.train;
    let truth = train.truth.clone();
    let root = RngStream::new(cfg.master_seed, replicate as u64)
        .derive_named(spec.name.label())
        .derive_named("methods");
    let mut ws = Workspace {
        train: &train,
        prm: &cfg.params,
        paths: HashMap::new(),
    };
    for (m, slot) in methods.iter().zip(cells.iter_mut()) {
        if slot.is_some() {
            continue;
        }
        let cell = run_cell(*m, replicate, &mut ws, &pair.test, &truth, &root);
        log::info!("{} r{replicate} {m}: {:.2}s", spec.name, cell.seconds);
        write_json(&cell_path(&dir, &m.to_string()), &cell)?;
        *slot = Some(cell);
    }
    Ok((info, cells.into_iter().flatten().collect()))
}

fn cutoff_for(rankings: &[VariableRanking], truth: &[usize], kind: CurveKind, mode: CutoffMode) -> Option<f64> {
    let ranked: Vec<VariableRanking> = rankings
        .iter()
        .filter(|r| r.scores.iter().any(Option::is_some))
        .cloned()
        .collect();
    common_cutoff(&ranked, truth, kind, mode).filter(|c| *c > 0.0)
}

/// Metric rows of one unit; partial areas share a cutoff across the
/// unit's successful cells.
fn unit_rows(info: &ReplicateInfo, cells: &[CellRecord], mode: CutoffMode) -> Vec<MetricRow> {
    let truth: Vec<usize> = info.truth.iter().map(|j| j - 1).collect();
    let rankings: Vec<VariableRanking> = cells
        .iter()
        .filter(|c| c.error.is_none())
        .map(|c| VariableRanking::new(c.ranking.clone()))
        .collect();
    let roc_cut = cutoff_for(&rankings, &truth, CurveKind::Roc, mode);
    let pr_cut = cutoff_for(&rankings, &truth, CurveKind::Pr, mode);
    let reference = roc_cut.and_then(|c| reference_pauc(&truth, info.p, c));
    cells
        .iter()
        .map(|c| {
            let ok = c.error.is_none();
            let r = VariableRanking::new(c.ranking.clone());
            let roc = roc_cut.filter(|_| ok).and_then(|cut| p_roc_auc(&r, &truth, cut));
            let pr = pr_cut.filter(|_| ok).and_then(|cut| p_pr_auc(&r, &truth, cut));
            MetricRow {
                design: c.design,
                method: c.method.clone(),
                replicate: c.replicate,
                mse: c.mse,
                recall: c.confusion.map(|k| k.recall()),
                specificity: c.confusion.map(|k| k.specificity()),
                fdp: c.confusion.map(|k| k.fdp()),
                proc_auc: roc.map(|a| a.raw),
                ppr_auc: pr.map(|a| a.raw),
                cutoff_mode: mode,
                cutoff: roc_cut,
                pr_cutoff: pr_cut,
                proc_auc_normalized: roc.map(|a| a.normalized),
                ppr_auc_normalized: pr.map(|a| a.normalized),
                reference_pauc: reference.map(|a| a.raw),
            }
        })
        .collect()
}

/// Run the study described by `cfg`, persisting cells under its output
/// directory, and aggregate the results. Method failures become missing
/// cells listed in `failures`.
pub fn run_benchmark(cfg: &BenchConfig, opts: &RunOptions) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let methods = cfg.method_list()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let units: Vec<(usize, usize)> = (0..cfg.designs.len())
        .flat_map(|d| (0..cfg.replicates).map(move |r| (d, r)))
        .collect();
    let results = map_indexed(units.len(), |u| {
        let (d, r) = units[u];
        run_unit(cfg, &cfg.designs[d], r, &methods, opts)
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for res in results {
        let (info, cells) = res?;
        failures.extend(cells.iter().filter_map(|c| {
            c.error.as_ref().map(|e| Failure {
                design: c.design,
                replicate: c.replicate,
                method: c.method.clone(),
                error: e.clone(),
            })
        }));
        rows.extend(unit_rows(&info, &cells, cfg.cutoff_mode));
    }
    let method_names: Vec<String> = methods.iter().map(ToString::to_string).collect();
    let designs: Vec<Design> = cfg.designs.iter().map(|d| d.name).collect();
    let (tables, reference) = aggregate(&rows, &designs, &method_names);
    Ok(BenchReport {
        schema: "hdsel-bench-report/1".into(),
        config: ConfigEcho {
            designs: cfg.designs.clone(),
            methods: method_names,
            replicates: cfg.replicates,
            master_seed: cfg.master_seed,
            cutoff_mode: cfg.cutoff_mode,
            params: cfg.params.clone(),
        },
        rows,
        tables,
        reference,
        failures,
    })
}
