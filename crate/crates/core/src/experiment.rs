//! End-to-end experiment orchestration: ingest, split, expertise, kernel
//! sweep, metrics and report tables.
//!
//! All cells of one seed share one split, one training graph and one cached
//! expertise vector per method; λ only enters the kernel. Outputs depend on
//! nothing but the configuration, so repeated runs write identical files.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, InteractionLog, SplitDataset};
use crate::error::{Error, Result};
use crate::expertise::{self, ExpertiseMethod, ExpertiseVector, GiniMode};
use crate::graph::BipartiteGraph;
use crate::kernels::{
    method_label, parse_method_label, KernelSpec, Method, RecommendationList, Scorer,
    ShareNormalization,
};
use crate::metrics::{self, EvalReport, HammingMode};
use crate::reference::{self, ReferenceCell};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetFormat {
    /// Four integer columns, `u.data` style.
    #[default]
    MovieLens,
    /// `user item [extra...]`.
    EdgeList,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "movielens" => Ok(DatasetFormat::MovieLens),
            "edges" | "edgelist" | "edge-list" => Ok(DatasetFormat::EdgeList),
            _ => Err(Error::Config(format!("unknown dataset format {s:?}"))),
        }
    }
}

pub fn load_log(
    path: &std::path::Path,
    format: DatasetFormat,
    min_rating: Option<i64>,
) -> Result<InteractionLog> {
    let log = match format {
        DatasetFormat::MovieLens => dataset::parse_movielens(path)?,
        DatasetFormat::EdgeList => dataset::parse_edge_list(path)?,
    };
    match min_rating {
        Some(min) => log.with_min_rating(min),
        None => Ok(log),
    }
}

/// A kernel family without its λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub expertise: Option<ExpertiseMethod>,
}

impl MethodSpec {
    pub fn md() -> Self {
        MethodSpec {
            method: Method::Md,
            expertise: None,
        }
    }

    pub fn extra(expertise: ExpertiseMethod) -> Self {
        MethodSpec {
            method: Method::Extra,
            expertise: Some(expertise),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&method_label(self.method, self.expertise))
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (method, expertise) = parse_method_label(s)?;
        Ok(MethodSpec { method, expertise })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Name written into the `dataset` column; defaults to the file stem.
    pub dataset_name: Option<String>,
    pub format: DatasetFormat,
    pub min_rating: Option<i64>,
    pub train_fraction: f64,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSpec>,
    pub lambdas: Vec<f64>,
    pub ks: Vec<usize>,
    pub normalization: ShareNormalization,
    pub gini_mode: GiniMode,
    pub hamming: HammingMode,
    /// Evaluate cells concurrently instead of one after another.
    pub parallel_cells: bool,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            dataset_name: None,
            format: DatasetFormat::MovieLens,
            min_rating: None,
            train_fraction: reference::TRAIN_FRACTION,
            seeds: vec![0, 1, 2, 3, 4],
            methods: vec![MethodSpec::md()],
            lambdas: Vec::new(),
            ks: vec![reference::K],
            normalization: ShareNormalization::default(),
            gini_mode: GiniMode::default(),
            hamming: HammingMode::Exact,
            parallel_cells: false,
        }
    }

    pub fn name(&self) -> String {
        self.dataset_name.clone().unwrap_or_else(|| {
            self.dataset
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::TrainFraction(self.train_fraction));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods".into()));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config(
                "K grid must be non-empty and positive".into(),
            ));
        }
        if self.methods.iter().any(|m| m.method.uses_lambda()) && self.lambdas.is_empty() {
            return Err(Error::Config(
                "λ grid is empty but a λ-dependent method was requested".into(),
            ));
        }
        for cell in self.cells() {
            cell.kernel(self.normalization).validate()?;
        }
        Ok(())
    }

    /// Cells in method order, λ ascending within a method.
    pub fn cells(&self) -> Vec<Cell> {
        let mut lambdas = self.lambdas.clone();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        let mut out = Vec::new();
        for &m in &self.methods {
            if m.method.uses_lambda() {
                out.extend(lambdas.iter().map(|&l| Cell {
                    method: m,
                    lambda: Some(l),
                }));
            } else {
                out.push(Cell {
                    method: m,
                    lambda: None,
                });
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub method: MethodSpec,
    pub lambda: Option<f64>,
}

impl Cell {
    pub fn kernel(&self, normalization: ShareNormalization) -> KernelSpec {
        let lambda = self.lambda.unwrap_or(1.0);
        KernelSpec {
            method: self.method.method,
            lambda,
            expertise: self.method.expertise,
            normalization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub dataset: String,
    pub seed: u64,
    pub method: String,
    pub lambda: Option<f64>,
    pub report: EvalReport,
}

/// Split, training graph, probe sets and evaluated users for one seed.
pub struct Prepared {
    pub split: SplitDataset,
    pub graph: BipartiteGraph,
    pub probe: Vec<Vec<u32>>,
    pub users: Vec<u32>,
    expertise: HashMap<(ExpertiseMethod, GiniMode), ExpertiseVector>,
}

impl Prepared {
    pub fn new(log: &InteractionLog, train_fraction: f64, seed: u64) -> Result<Self> {
        Ok(Self::from_split(dataset::split(log, train_fraction, seed)?))
    }

    /// Wraps a split that already exists, e.g. one read back from a manifest.
    pub fn from_split(split: SplitDataset) -> Self {
        let graph = BipartiteGraph::from_split(&split);
        let probe = split.probe_sets();
        let users = metrics::evaluated_users(&graph, &probe);
        Prepared {
            split,
            graph,
            probe,
            users,
            expertise: HashMap::new(),
        }
    }

    pub fn expertise(&mut self, method: ExpertiseMethod, gini_mode: GiniMode) -> &ExpertiseVector {
        let graph = &self.graph;
        self.expertise
            .entry((method, gini_mode))
            .or_insert_with(|| expertise::compute(graph, method, gini_mode))
    }

    /// Lists of length `k` for every evaluated user.
    pub fn recommend(
        &self,
        spec: KernelSpec,
        expertise: Option<&ExpertiseVector>,
        k: usize,
    ) -> Result<Vec<RecommendationList>> {
        let scorer = Scorer::new(&self.graph, spec, expertise)?;
        Ok(scorer.recommend_all(&self.users, k))
    }

    /// One report per entry of `ks`, from a single ranking at `max(ks)`.
    pub fn evaluate(
        &self,
        spec: KernelSpec,
        expertise: Option<&ExpertiseVector>,
        ks: &[usize],
        hamming: HammingMode,
    ) -> Result<Vec<EvalReport>> {
        let kmax = ks.iter().copied().max().unwrap_or(0);
        let lists = self.recommend(spec, expertise, kmax)?;
        ks.iter()
            .map(|&k| metrics::evaluate(&lists, &self.graph, &self.probe, k, hamming))
            .collect()
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<CellReport>> {
    config.validate()?;
    let log = load_log(&config.dataset, config.format, config.min_rating)?;
    run_on_log(config, &log)
}

/// [`run_experiment`] on an already parsed log; `config.dataset` is only
/// used for naming.
pub fn run_on_log(config: &ExperimentConfig, log: &InteractionLog) -> Result<Vec<CellReport>> {
    config.validate()?;
    let name = config.name();
    let cells = config.cells();
    let mut out = Vec::new();
    for &seed in &config.seeds {
        let mut prepared = Prepared::new(log, config.train_fraction, seed)?;
        for m in cells.iter().filter_map(|c| c.method.expertise) {
            prepared.expertise(m, config.gini_mode);
        }
        let prepared = &prepared;
        let run = |cell: &Cell| -> Result<Vec<CellReport>> {
            let spec = cell.kernel(config.normalization);
            let e = cell
                .method
                .expertise
                .map(|m| &prepared.expertise[&(m, config.gini_mode)]);
            let reports = prepared.evaluate(spec, e, &config.ks, config.hamming)?;
            Ok(reports
                .into_iter()
                .map(|report| CellReport {
                    dataset: name.clone(),
                    seed,
                    method: cell.method.to_string(),
                    lambda: cell.lambda,
                    report,
                })
                .collect())
        };
        let per_cell: Vec<Vec<CellReport>> = if config.parallel_cells {
            cells.par_iter().map(run).collect::<Result<_>>()?
        } else {
            cells.iter().map(run).collect::<Result<_>>()?
        };
        out.extend(per_cell.into_iter().flatten());
    }
    Ok(out)
}

fn lambda_field(lambda: Option<f64>) -> String {
    lambda
        .map(|l| format!("{l}"))
        .unwrap_or_else(|| "NA".into())
}

/// Long-form CSV: `dataset,seed,method,lambda,K,metric,value`.
pub fn write_long_csv<W: Write>(reports: &[CellReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "dataset", "seed", "method", "lambda", "K", "metric", "value",
    ])?;
    for r in reports {
        let e = &r.report;
        let mut metrics = vec![
            ("precision", e.precision.to_string()),
            ("recall", e.recall.to_string()),
            ("f1", e.f1.to_string()),
            ("coverage", e.coverage.to_string()),
            ("intra_diversity", e.intra_diversity.to_string()),
            ("hamming", e.hamming.to_string()),
        ];
        if let Some(se) = e.hamming_std_error {
            metrics.push(("hamming_std_error", se.to_string()));
        }
        metrics.push(("evaluated_users", e.evaluated_users.to_string()));
        for (metric, value) in metrics {
            w.write_record([
                r.dataset.as_str(),
                &r.seed.to_string(),
                &r.method,
                &lambda_field(r.lambda),
                &e.k.to_string(),
                metric,
                &value,
            ])?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed-averaged metrics of one (method, λ, K) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: String,
    pub lambda: Option<f64>,
    pub k: usize,
    pub seeds: usize,
    pub precision: (f64, f64),
    pub recall: (f64, f64),
    pub f1: (f64, f64),
    pub coverage: (f64, f64),
    pub intra_diversity: (f64, f64),
    pub hamming: (f64, f64),
}

/// Aggregates reports over seeds, keeping method order of first appearance
/// and λ, K ascending.
pub fn sweep_table(reports: &[CellReport]) -> Vec<SweepRow> {
    let mut method_order: Vec<&str> = Vec::new();
    for r in reports {
        if !method_order.contains(&r.method.as_str()) {
            method_order.push(&r.method);
        }
    }
    type Key = (usize, Option<u64>, usize);
    let mut groups: BTreeMap<Key, Vec<&CellReport>> = BTreeMap::new();
    for r in reports {
        let m = method_order.iter().position(|m| *m == r.method).unwrap();
        // f64 bits order correctly for non-negative values
        groups
            .entry((m, r.lambda.map(f64::to_bits), r.report.k))
            .or_default()
            .push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let col = |f: fn(&EvalReport) -> f64| {
                mean_std(&rs.iter().map(|r| f(&r.report)).collect::<Vec<_>>())
            };
            SweepRow {
                method: rs[0].method.clone(),
                lambda: rs[0].lambda,
                k: rs[0].report.k,
                seeds: rs.len(),
                precision: col(|e| e.precision),
                recall: col(|e| e.recall),
                f1: col(|e| e.f1),
                coverage: col(|e| e.coverage as f64),
                intra_diversity: col(|e| e.intra_diversity),
                hamming: col(|e| e.hamming),
            }
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "lambda",
        "K",
        "seeds",
        "precision",
        "precision_sd",
        "recall",
        "recall_sd",
        "f1",
        "f1_sd",
        "coverage",
        "coverage_sd",
        "intra_diversity",
        "intra_diversity_sd",
        "hamming",
        "hamming_sd",
    ])?;
    for r in rows {
        let mut rec = vec![
            r.method.clone(),
            lambda_field(r.lambda),
            r.k.to_string(),
            r.seeds.to_string(),
        ];
        for (m, s) in [
            r.precision,
            r.recall,
            r.f1,
            r.coverage,
            r.intra_diversity,
            r.hamming,
        ] {
            rec.push(format!("{m:.6}"));
            rec.push(format!("{s:.6}"));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// λ maximizing each metric, per (method, K), for methods that have a λ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestLambda {
    pub method: String,
    pub k: usize,
    pub metric: &'static str,
    pub lambda: f64,
    pub value: f64,
}

type MetricOf = fn(&SweepRow) -> f64;

pub fn best_lambdas(rows: &[SweepRow]) -> Vec<BestLambda> {
    let mut out = Vec::new();
    let metrics: [(&str, MetricOf); 4] = [
        ("f1", |r| r.f1.0),
        ("coverage", |r| r.coverage.0),
        ("intra_diversity", |r| r.intra_diversity.0),
        ("hamming", |r| r.hamming.0),
    ];
    let mut keys: Vec<(&str, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.lambda.is_some()) {
        if !keys.contains(&(r.method.as_str(), r.k)) {
            keys.push((&r.method, r.k));
        }
    }
    for (method, k) in keys {
        let group: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.method == method && r.k == k && r.lambda.is_some())
            .collect();
        for (name, f) in metrics {
            // first maximum wins, so ties resolve to the smaller λ
            let best = group.iter().fold(None::<&SweepRow>, |acc, r| match acc {
                Some(b) if f(b) >= f(r) => Some(b),
                _ => Some(r),
            });
            if let Some(b) = best {
                out.push(BestLambda {
                    method: method.to_string(),
                    k,
                    metric: name,
                    lambda: b.lambda.unwrap(),
                    value: f(b),
                });
            }
        }
    }
    out
}

/// Text table with one row per λ and one `F1 coverage` column pair per method.
pub fn write_pivot<W: Write>(rows: &[SweepRow], k: usize, mut out: W) -> std::io::Result<()> {
    let rows: Vec<&SweepRow> = rows.iter().filter(|r| r.k == k).collect();
    let mut methods: Vec<&str> = Vec::new();
    let mut lambdas: Vec<f64> = Vec::new();
    for r in &rows {
        if r.lambda.is_some() && !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if let Some(l) = r.lambda {
            if !lambdas.iter().any(|x| (x - l).abs() < 1e-12) {
                lambdas.push(l);
            }
        }
    }
    lambdas.sort_by(f64::total_cmp);
    for r in rows.iter().filter(|r| r.lambda.is_none()) {
        writeln!(out, "{}: ({:.3}, {:.0})", r.method, r.f1.0, r.coverage.0)?;
    }
    write!(out, "{:>6}", "lambda")?;
    for m in &methods {
        write!(out, " | {:>15}", m)?;
    }
    writeln!(out)?;
    for l in lambdas {
        write!(out, "{l:>6.2}")?;
        for m in &methods {
            match rows
                .iter()
                .find(|r| r.method == *m && r.lambda.is_some_and(|x| (x - l).abs() < 1e-12))
            {
                Some(r) => write!(out, " | {:>7.3} {:>7.0}", r.f1.0, r.coverage.0)?,
                None => write!(out, " | {:>15}", "-")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One reference cell next to its measurement over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproductionRow {
    pub method: String,
    pub lambda: Option<f64>,
    pub reference_f1: f64,
    pub reference_coverage: usize,
    pub f1: (f64, f64),
    pub coverage: (f64, f64),
    pub f1_ok: bool,
    pub coverage_ok: bool,
}

impl ReproductionRow {
    pub fn passed(&self) -> bool {
        self.f1_ok && self.coverage_ok
    }
}

pub fn reproduction_config(dataset: impl Into<PathBuf>, seeds: Vec<u64>) -> ExperimentConfig {
    let mut config = ExperimentConfig::new(dataset);
    config.seeds = seeds;
    config.methods = std::iter::once(MethodSpec::md())
        .chain(reference::METHODS.iter().map(|&m| MethodSpec::extra(m)))
        .collect();
    config.lambdas = reference::LAMBDAS.to_vec();
    config.ks = vec![reference::K];
    config
}

/// Compares seed-averaged reports against the MovieLens reference cells.
pub fn compare_with_reference(reports: &[CellReport]) -> Vec<ReproductionRow> {
    let rows = sweep_table(reports);
    reference::movielens_cells()
        .into_iter()
        .filter_map(|cell: ReferenceCell| {
            let label = method_label(
                if cell.expertise.is_some() {
                    Method::Extra
                } else {
                    Method::Md
                },
                cell.expertise,
            );
            let row = rows.iter().find(|r| {
                r.k == reference::K
                    && r.method == label
                    && match (r.lambda, cell.lambda) {
                        (Some(a), Some(b)) => (a - b).abs() < 1e-9,
                        (None, None) => true,
                        _ => false,
                    }
            })?;
            Some(ReproductionRow {
                method: label,
                lambda: cell.lambda,
                reference_f1: cell.f1,
                reference_coverage: cell.coverage,
                f1: row.f1,
                coverage: row.coverage,
                f1_ok: cell.f1_ok(row.f1.0),
                coverage_ok: cell.coverage_ok(row.coverage.0),
            })
        })
        .collect()
}

pub fn write_reproduction_csv<W: Write>(rows: &[ReproductionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "lambda",
        "reference_f1",
        "f1_mean",
        "f1_sd",
        "reference_coverage",
        "coverage_mean",
        "coverage_sd",
        "pass",
    ])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            lambda_field(r.lambda),
            format!("{:.3}", r.reference_f1),
            format!("{:.4}", r.f1.0),
            format!("{:.4}", r.f1.1),
            r.reference_coverage.to_string(),
            format!("{:.1}", r.coverage.0),
            format!("{:.1}", r.coverage.1),
            r.passed().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}
