//! Experiment matrix runner.

pub mod adversarial;
pub mod plot;

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{lambda_halfline, lambda_k, Arity, OracleKind};
use crate::error::BenchError;
use crate::gen::{derive_seed, partial, perturb, synth_half_line, synth_instances, NoiseSpec};
use crate::instance::{parse_instance_file, Instance, Kind, PredictionSet};
use crate::metric::{
    grid_graph, half_line_space, line_space, metric_closure, parse_graph_csv, parse_matrix_csv, MetricSpace, PointId,
};
use crate::policy::{Algo, AlgoConfig};
use crate::sim::{ratio, run, OptMode};
use crate::tour::{halfline_opt, optimal, SolverConfig, SolverKind, DEFAULT_EXACT_CAP};

pub use adversarial::{adversarial, Adversarial, AdversarialKind};

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_cap() -> usize {
    DEFAULT_EXACT_CAP
}

fn default_sub() -> Algo {
    Algo::Smartstart
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    Grid {
        width: usize,
        height: usize,
        #[serde(default = "one")]
        weight: f64,
        count: usize,
        per_instance: usize,
        horizon: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        rides: bool,
    },
    HalfLine {
        count: usize,
        per_instance: usize,
        reach: f64,
        horizon: f64,
        #[serde(default)]
        seed: u64,
    },
    Files {
        space: SpaceSource,
        paths: Vec<PathBuf>,
    },
}

/// Where the metric of file-based instances comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSource {
    Graph { path: PathBuf },
    Matrix { path: PathBuf },
    Grid {
        width: usize,
        height: usize,
        #[serde(default = "one")]
        weight: f64,
    },
    Line {
        coords: Vec<f64>,
        #[serde(default)]
        origin_coord: f64,
    },
    HalfLine { coords: Vec<f64> },
}

impl SpaceSource {
    /// Graph and matrix spaces take the given origin; line spaces fix their own.
    pub fn load(&self, origin: PointId) -> Result<MetricSpace, BenchError> {
        let space = match self {
            SpaceSource::Graph { path } => metric_closure(&parse_graph_csv(&std::fs::read_to_string(path)?, origin)?)?,
            SpaceSource::Matrix { path } => parse_matrix_csv(&std::fs::read_to_string(path)?, origin)?,
            SpaceSource::Grid { width, height, weight } => {
                let mut g = grid_graph(*width, *height, *weight);
                g.origin = origin;
                metric_closure(&g)?
            }
            SpaceSource::Line { coords, origin_coord } => line_space(coords, *origin_coord)?,
            SpaceSource::HalfLine { coords } => half_line_space(coords)?,
        };
        if space.origin() != origin {
            return Err(BenchError::Param(format!("origin {origin} does not match the space origin {}", space.origin())));
        }
        Ok(space)
    }
}

impl InstanceSource {
    pub fn load(&self) -> Result<Vec<Instance>, BenchError> {
        match self {
            InstanceSource::Grid { width, height, weight, count, per_instance, horizon, seed, rides } => {
                let space = Arc::new(metric_closure(&grid_graph(*width, *height, *weight))?);
                let kind = if *rides { Kind::Darp } else { Kind::Tsp };
                Ok(synth_instances(space, kind, *count, *per_instance, *horizon, *seed)?)
            }
            InstanceSource::HalfLine { count, per_instance, reach, horizon, seed } => {
                Ok(synth_half_line(*count, *per_instance, *reach, *horizon, *seed)?)
            }
            InstanceSource::Files { space, paths } => paths
                .iter()
                .map(|p| {
                    let file = parse_instance_file(&std::fs::read_to_string(p)?)?;
                    let metric = Arc::new(space.load(file.origin())?);
                    Ok(Instance::new(metric, file.requests())?)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    SigmaRelease,
    SigmaLocation,
    SigmaBoth,
    Fraction,
    /// Scalar makespan prediction offset from the true optimum.
    ChatDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
    /// Fixed release noise when another parameter is swept.
    #[serde(default)]
    pub sigma_release: f64,
    #[serde(default)]
    pub sigma_location: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Sweep {
    fn prediction(&self, value: f64, inst: &Instance, opt: f64, seed: u64) -> Result<PredictionSet, BenchError> {
        let noise = |r: f64, l: f64| NoiseSpec::new(r, l, seed);
        Ok(match self.param {
            SweepParam::SigmaRelease => perturb(inst, &noise(value, self.sigma_location))?,
            SweepParam::SigmaLocation => perturb(inst, &noise(self.sigma_release, value))?,
            SweepParam::SigmaBoth => perturb(inst, &noise(value, value))?,
            SweepParam::Fraction => partial(inst, value, seed)?,
            SweepParam::ChatDelta => PredictionSet::Makespan((opt + value).max(0.0)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoEntry {
    pub algo: Algo,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default = "default_sub")]
    pub sub: Algo,
    #[serde(default)]
    pub approx: bool,
    #[serde(default = "yes")]
    pub practical: bool,
}

impl AlgoEntry {
    pub fn new(algo: Algo) -> Self {
        AlgoEntry { algo, alphas: Vec::new(), sub: default_sub(), approx: false, practical: true }
    }

    pub fn alphas(mut self, alphas: &[f64]) -> Self {
        self.alphas = alphas.to_vec();
        self
    }

    fn configs(&self, exact_cap: usize) -> Result<Vec<(Option<f64>, AlgoConfig)>, BenchError> {
        let base = AlgoConfig::new(self.algo)
            .sub(self.sub)
            .approx(self.approx)
            .practical(self.practical)
            .exact_cap(exact_cap);
        if !self.algo.uses_alpha() {
            return Ok(vec![(None, base)]);
        }
        if self.alphas.is_empty() {
            return Err(BenchError::EmptySpec("alphas"));
        }
        Ok(self.alphas.iter().map(|&a| (Some(a), base.alpha(a))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub algorithms: Vec<AlgoEntry>,
    pub source: InstanceSource,
    pub sweep: Sweep,
    #[serde(default = "exact_mode")]
    pub opt_mode: OptMode,
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Compute the first cover error per run when within the cover caps.
    #[serde(default = "yes")]
    pub lambda: bool,
    /// Record wall-clock time per run (makes the CSV non-reproducible).
    #[serde(default)]
    pub timing: bool,
}

fn exact_mode() -> OptMode {
    OptMode::Exact
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Param(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algo: String,
    pub alpha: Option<f64>,
    pub sweep_param: f64,
    pub instance_id: usize,
    pub makespan: f64,
    pub opt_est: f64,
    pub ratio: f64,
    pub lambda1: Option<f64>,
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algo: String,
    pub alpha: Option<f64>,
    pub sweep_param: f64,
    pub n: usize,
    pub mean_ratio: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<CellSummary>,
}

fn opt_estimate(inst: &Instance, mode: OptMode, cap: usize) -> Result<f64, BenchError> {
    let space = &*inst.space;
    if space.is_half_line() && inst.kind() == Kind::Tsp {
        return Ok(halfline_opt(inst.jobs().iter().map(|j| (space.coord(j.pickup).unwrap_or(0.0), j.release))));
    }
    let cfg = match mode {
        OptMode::Exact => SolverConfig::exact(cap),
        OptMode::Approx => SolverConfig { kind: SolverKind::Approx, exact_cap: cap },
    };
    Ok(optimal(inst, &cfg)?.completion)
}

/// First cover error of a prediction, or None when outside the caps.
pub fn lambda1(inst: &Instance, pred: &PredictionSet) -> Option<f64> {
    match pred {
        PredictionSet::Makespan(c) => lambda_halfline(inst, *c).ok(),
        PredictionSet::Requests(_) => {
            let oracle = match inst.kind() {
                Kind::Tsp => OracleKind::Tsp,
                Kind::Darp => OracleKind::Darp,
            };
            lambda_k(inst, pred, Arity::Finite(1), &oracle).ok().map(|r| r.lambda_k)
        }
    }
}

/// Cells of (algo, alpha, sweep value): mean ratio with a normal 95% interval.
pub fn summarize(rows: &[ResultRow]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let key = |r: &ResultRow| (r.algo.clone(), r.alpha.map(f64::to_bits), r.sweep_param.to_bits());
        let k = key(&rows[i]);
        let mut j = i;
        while j < rows.len() && key(&rows[j]) == k {
            j += 1;
        }
        let xs: Vec<f64> = rows[i..j].iter().map(|r| r.ratio).collect();
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        out.push(CellSummary {
            algo: rows[i].algo.clone(),
            alpha: rows[i].alpha,
            sweep_param: rows[i].sweep_param,
            n,
            mean_ratio: mean,
            stderr,
            ci_low: mean - 1.96 * stderr,
            ci_high: mean + 1.96 * stderr,
        });
        i = j;
    }
    out
}

fn row_order(a: &ResultRow, b: &ResultRow) -> std::cmp::Ordering {
    a.algo
        .cmp(&b.algo)
        .then_with(|| match (a.alpha, b.alpha) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (x, y) => x.is_some().cmp(&y.is_some()),
        })
        .then_with(|| a.sweep_param.total_cmp(&b.sweep_param))
        .then_with(|| a.instance_id.cmp(&b.instance_id))
}

pub fn run_matrix(spec: &ExperimentSpec) -> Result<MatrixResult, BenchError> {
    if spec.algorithms.is_empty() {
        return Err(BenchError::EmptySpec("algorithms"));
    }
    if spec.sweep.values.is_empty() {
        return Err(BenchError::EmptySpec("sweep values"));
    }
    let instances = spec.source.load()?;
    if instances.is_empty() {
        return Err(BenchError::EmptySpec("instances"));
    }
    if spec.sweep.param == SweepParam::ChatDelta && !instances.iter().all(|i| i.space.is_half_line()) {
        return Err(BenchError::Param("scalar makespan predictions need half-line instances".into()));
    }
    let opts: Vec<f64> = instances
        .par_iter()
        .map(|inst| opt_estimate(inst, spec.opt_mode, spec.exact_cap))
        .collect::<Result<_, _>>()?;

    let cells: Vec<(usize, usize)> =
        (0..spec.sweep.values.len()).flat_map(|s| (0..instances.len()).map(move |k| (s, k))).collect();
    let preds: Vec<(PredictionSet, Option<f64>)> = cells
        .par_iter()
        .map(|&(s, k)| {
            let seed = derive_seed(spec.sweep.seed, &[s as u64, k as u64]);
            let p = spec.sweep.prediction(spec.sweep.values[s], &instances[k], opts[k], seed)?;
            let l = if spec.lambda { lambda1(&instances[k], &p) } else { None };
            Ok((p, l))
        })
        .collect::<Result<_, BenchError>>()?;

    let mut configs = Vec::new();
    for entry in &spec.algorithms {
        configs.extend(entry.configs(spec.exact_cap)?);
    }
    let tasks: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..cells.len()).map(move |x| (c, x))).collect();
    let mut rows: Vec<ResultRow> = tasks
        .par_iter()
        .map(|&(c, x)| {
            let (alpha, cfg) = &configs[c];
            let (s, k) = cells[x];
            let (pred, lambda) = &preds[x];
            let inst = &instances[k];
            let clock = Instant::now();
            let mut policy = cfg.build(cfg.algo.uses_prediction().then_some(pred))?;
            let trace = run(inst, policy.as_mut())
                .map_err(|e| BenchError::Param(format!("{} on instance {k}: {e}", cfg.label())))?;
            let elapsed = clock.elapsed().as_secs_f64() * 1e3;
            Ok(ResultRow {
                algo: cfg.label(),
                alpha: *alpha,
                sweep_param: spec.sweep.values[s],
                instance_id: k,
                makespan: trace.makespan,
                opt_est: opts[k],
                ratio: ratio(trace.makespan, opts[k]),
                lambda1: *lambda,
                runtime_ms: spec.timing.then_some(elapsed),
            })
        })
        .collect::<Result<_, BenchError>>()?;
    rows.sort_by(row_order);
    let summary = summarize(&rows);
    Ok(MatrixResult { rows, summary })
}

pub fn write_csv<T: Serialize, W: Write>(items: &[T], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for it in items {
        w.serialize(it)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(items: &[T]) -> Result<String, BenchError> {
    let mut buf = Vec::new();
    write_csv(items, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>, BenchError> {
    let mut r = csv::Reader::from_reader(input);
    let rows: Vec<ResultRow> = r.deserialize().collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(BenchError::EmptyCsv);
    }
    Ok(rows)
}

pub fn read_rows_file(path: &Path) -> Result<Vec<ResultRow>, BenchError> {
    read_rows(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            algorithms: vec![AlgoEntry::new(Algo::Replan), AlgoEntry::new(Algo::SmartTrust).alphas(&[0.1])],
            source: InstanceSource::Grid {
                width: 4,
                height: 4,
                weight: 1.0,
                count: 4,
                per_instance: 4,
                horizon: 6.0,
                seed: 1,
                rides: false,
            },
            sweep: Sweep { param: SweepParam::Fraction, values: vec![1.0], sigma_release: 0.0, sigma_location: 0.0, seed: 3 },
            opt_mode: OptMode::Exact,
            exact_cap: DEFAULT_EXACT_CAP,
            output: None,
            lambda: true,
            timing: false,
        }
    }

    #[test]
    fn perfect_predictions_are_consistent() {
        let res = run_matrix(&small_spec()).unwrap();
        assert_eq!(res.rows.len(), 8);
        assert!(res.rows.iter().all(|r| r.ratio >= 1.0 - 1e-12));
        let st = res.summary.iter().find(|c| c.algo == "smart-trust").unwrap();
        assert!(st.mean_ratio <= 1.1 + 1e-9);
        assert!(res.rows.iter().all(|r| r.lambda1 == Some(0.0)));
    }

    #[test]
    fn empty_spec_is_rejected() {
        let mut s = small_spec();
        s.algorithms.clear();
        assert!(matches!(run_matrix(&s), Err(BenchError::EmptySpec(_))));
        let mut s = small_spec();
        s.sweep.values.clear();
        assert!(matches!(run_matrix(&s), Err(BenchError::EmptySpec(_))));
        let mut s = small_spec();
        s.algorithms = vec![AlgoEntry::new(Algo::SmartTrust)];
        assert!(matches!(run_matrix(&s), Err(BenchError::EmptySpec("alphas"))));
    }

    #[test]
    fn csv_round_trip() {
        let res = run_matrix(&small_spec()).unwrap();
        let text = csv_string(&res.rows).unwrap();
        assert!(text.starts_with("algo,alpha,sweep_param,instance_id,makespan,opt_est,ratio,lambda1,runtime_ms"));
        assert_eq!(read_rows(text.as_bytes()).unwrap(), res.rows);
        assert!(matches!(read_rows("".as_bytes()), Err(BenchError::EmptyCsv)));
    }

    #[test]
    fn summary_interval() {
        let row = |ratio: f64, id: usize| ResultRow {
            algo: "a".into(),
            alpha: None,
            sweep_param: 0.0,
            instance_id: id,
            makespan: ratio,
            opt_est: 1.0,
            ratio,
            lambda1: None,
            runtime_ms: None,
        };
        let s = summarize(&[row(1.0, 0), row(3.0, 1)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_ratio, 2.0);
        assert!((s[0].stderr - 1.0).abs() < 1e-12);
        assert!((s[0].ci_high - 3.96).abs() < 1e-12);
        let single = summarize(&[row(1.5, 0)]);
        assert_eq!((single[0].ci_low, single[0].ci_high), (1.5, 1.5));
    }
}
