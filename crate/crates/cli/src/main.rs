use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use covertour::bench::{
    adversarial, csv_string, plot::plot_svg, read_rows_file, run_matrix, AdversarialKind, ExperimentSpec, SpaceSource,
};
use covertour::cover::{lambda_halfline, lambda_k, Arity, OracleKind};
use covertour::gen::{derive_seed, perturb, synth_instances, NoiseSpec};
use covertour::instance::{
    parse_instance_file, parse_prediction_file, Instance, InstanceFile, Kind, PredictionFile, PredictionSet,
};
use covertour::metric::{parse_graph_csv, Geometry, MetricSpace, PointId};
use covertour::policy::{Algo, AlgoConfig};
use covertour::sim::{ratio, run};
use covertour::tour::{halfline_opt, optimal, SolverConfig, DEFAULT_EXACT_CAP};

#[derive(Parser)]
#[command(name = "covertour", version, about = "Online TSP and dial-a-ride with untrusted predictions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate random instances and noisy predictions.
    Gen(GenArgs),
    /// Run one policy on one instance.
    Simulate(SimArgs),
    /// Offline optimum of an instance.
    Opt(OptArgs),
    /// Cover error between an instance and a prediction.
    Error(ErrorArgs),
    /// Run an experiment matrix from a JSON config.
    Matrix(MatrixArgs),
    /// Emit a lower-bound instance with its prediction.
    Adversarial(AdvArgs),
    /// Draw a results CSV as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Args, Clone)]
struct SpaceArgs {
    /// Edge list CSV with header u,v,w.
    #[arg(long, group = "space")]
    graph: Option<PathBuf>,
    /// Distance matrix CSV, one row per point.
    #[arg(long, group = "space")]
    matrix: Option<PathBuf>,
    /// Comma-separated point coordinates on the line.
    #[arg(long, group = "space", value_delimiter = ',', allow_hyphen_values = true)]
    line: Option<Vec<f64>>,
    /// Comma-separated coordinates on the half-line (origin 0 is added).
    #[arg(long, group = "space", value_delimiter = ',')]
    half_line: Option<Vec<f64>>,
    /// Unit grid, e.g. 20x20.
    #[arg(long, group = "space")]
    grid: Option<String>,
    /// Origin coordinate for --line.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    origin_coord: f64,
}

impl SpaceArgs {
    fn source(&self) -> Result<SpaceSource> {
        Ok(if let Some(p) = &self.graph {
            SpaceSource::Graph { path: p.clone() }
        } else if let Some(p) = &self.matrix {
            SpaceSource::Matrix { path: p.clone() }
        } else if let Some(c) = &self.line {
            SpaceSource::Line { coords: c.clone(), origin_coord: self.origin_coord }
        } else if let Some(c) = &self.half_line {
            SpaceSource::HalfLine { coords: c.clone() }
        } else if let Some(g) = &self.grid {
            let (w, h) = g.split_once('x').context("grid must look like WxH")?;
            SpaceSource::Grid { width: w.trim().parse()?, height: h.trim().parse()?, weight: 1.0 }
        } else {
            bail!("one of --graph, --matrix, --line, --half-line or --grid is required")
        })
    }

    fn load(&self, origin: PointId) -> Result<Arc<MetricSpace>> {
        Ok(Arc::new(self.source()?.load(origin)?))
    }

    fn load_instance(&self, path: &Path) -> Result<Instance> {
        let file = parse_instance_file(&read(path)?)?;
        let space = self.load(file.origin())?;
        Ok(Instance::new(space, file.requests())?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long, default_value = "replan", value_parser = parse_algo)]
    algo: Algo,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Prediction-free subroutine for delay-trust.
    #[arg(long, default_value = "smartstart", value_parser = parse_algo)]
    sub: Algo,
    /// Approximation factor of the polynomial tour solver (only 2 is available).
    #[arg(long, default_value_t = 2.0)]
    nu: f64,
    /// Use the tree-doubling tour solver.
    #[arg(long)]
    approx: bool,
    /// Drop predictions already known to be absent.
    #[arg(long, value_enum, default_value = "on")]
    practical: OnOff,
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    exact_cap: usize,
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse()
}

impl PolicyArgs {
    fn config(&self) -> Result<AlgoConfig> {
        if self.nu != 2.0 {
            bail!("only nu = 2 is available, got {}", self.nu);
        }
        Ok(AlgoConfig::new(self.algo)
            .alpha(self.alpha)
            .sub(self.sub)
            .approx(self.approx)
            .practical(matches!(self.practical, OnOff::On))
            .exact_cap(self.exact_cap))
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long, default_value_t = 0)]
    origin: usize,
    #[arg(long, value_enum, default_value = "tsp")]
    kind: KindArg,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 10)]
    requests: usize,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_release: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_location: f64,
    /// Fraction of requests kept in the prediction.
    #[arg(long, default_value_t = 1.0)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Tsp,
    Darp,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    prediction: Option<PathBuf>,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Write the full trace as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OptArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    approx: bool,
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    exact_cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Tsp,
    Darp,
    St,
    Sf,
    Fl,
}

#[derive(Args)]
struct ErrorArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    prediction: PathBuf,
    /// Hyperedge arity, a positive integer or `inf`.
    #[arg(long, default_value = "1")]
    k: Arity,
    #[arg(long, value_enum, default_value = "tsp")]
    oracle: OracleArg,
    /// Facility opening costs, one per point (for --oracle fl).
    #[arg(long, value_delimiter = ',')]
    opening: Option<Vec<f64>>,
}

#[derive(Args)]
struct MatrixArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Overrides the prediction seed of the sweep.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Results CSV; the summary goes next to it with a `.summary.csv` suffix.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdvArgs {
    #[arg(long, value_parser = parse_adv)]
    kind: AdversarialKind,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Output directory for instance.json, prediction.json and space.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_adv(s: &str) -> Result<AdversarialKind, String> {
    s.parse()
}

#[derive(Args)]
struct PlotArgs {
    csv: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "empirical competitive ratio")]
    title: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_prediction(path: &Path) -> Result<PredictionSet> {
    Ok(parse_prediction_file(&read(path)?)?.into_prediction())
}

fn opt_of(inst: &Instance, cfg: &SolverConfig) -> Result<f64> {
    let space = &*inst.space;
    if space.is_half_line() && inst.kind() == Kind::Tsp {
        return Ok(halfline_opt(inst.jobs().iter().map(|j| (space.coord(j.pickup).unwrap_or(0.0), j.release))));
    }
    Ok(optimal(inst, cfg)?.completion)
}

fn gen(a: GenArgs) -> Result<()> {
    let space = a.space.load(PointId(a.origin))?;
    let kind = match a.kind {
        KindArg::Tsp => Kind::Tsp,
        KindArg::Darp => Kind::Darp,
    };
    let instances = synth_instances(space.clone(), kind, a.count, a.requests, a.horizon, a.seed)?;
    fs::create_dir_all(&a.out)?;
    for (k, inst) in instances.iter().enumerate() {
        let mut noise = NoiseSpec::new(a.sigma_release, a.sigma_location, derive_seed(a.seed, &[k as u64]));
        noise.fraction = a.fraction;
        let pred = perturb(inst, &noise)?;
        let ifile = serde_json::to_string_pretty(&InstanceFile::of(inst))?;
        let pfile = serde_json::to_string_pretty(&PredictionFile::of(space.origin(), &pred))?;
        write(&a.out.join(format!("instance_{k}.json")), &ifile)?;
        write(&a.out.join(format!("prediction_{k}.json")), &pfile)?;
    }
    println!("wrote {} instance/prediction pairs to {}", instances.len(), a.out.display());
    Ok(())
}

fn simulate(a: SimArgs) -> Result<()> {
    let inst = a.space.load_instance(&a.instance)?;
    let cfg = a.policy.config()?;
    let pred = a.prediction.as_deref().map(load_prediction).transpose()?;
    if cfg.algo.uses_prediction() && pred.is_none() {
        bail!("{} needs --prediction", cfg.algo);
    }
    let mut policy = cfg.build(pred.as_ref())?;
    let trace = run(&inst, policy.as_mut())?;
    let opt = opt_of(&inst, &cfg.solver())?;
    println!("policy={}", cfg.label());
    println!("makespan={}", trace.makespan);
    println!("opt={opt}");
    println!("ratio={}", ratio(trace.makespan, opt));
    for e in &trace.phase_log {
        println!("phase t={} {}", e.time, e.label);
    }
    if let Some(p) = &a.trace {
        write(p, &serde_json::to_string_pretty(&trace)?)?;
    }
    Ok(())
}

fn opt(a: OptArgs) -> Result<()> {
    let inst = a.space.load_instance(&a.instance)?;
    let cfg = if a.approx { SolverConfig::approx() } else { SolverConfig::exact(a.exact_cap) };
    let tour = optimal(&inst, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&tour)?);
    println!("completion={}", tour.completion);
    Ok(())
}

fn error(a: ErrorArgs) -> Result<()> {
    let inst = a.space.load_instance(&a.instance)?;
    let pred = load_prediction(&a.prediction)?;
    if let PredictionSet::Makespan(c) = pred {
        let l = lambda_halfline(&inst, c)?;
        println!("{}", json!({ "k": 1, "lambda_k": l }));
        println!("lambda_k={l}");
        return Ok(());
    }
    let oracle = match a.oracle {
        OracleArg::Tsp => OracleKind::Tsp,
        OracleArg::Darp => OracleKind::Darp,
        OracleArg::St => OracleKind::SteinerTree,
        OracleArg::Sf => {
            let path = a.space.graph.as_ref().context("--oracle sf needs --graph")?;
            OracleKind::SteinerForest { graph: parse_graph_csv(&read(path)?, inst.space.origin())? }
        }
        OracleArg::Fl => OracleKind::Facility { opening: a.opening.clone().context("--oracle fl needs --opening")? },
    };
    let report = lambda_k(&inst, &pred, a.k, &oracle)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!("lambda_k={}", report.lambda_k);
    Ok(())
}

fn matrix(a: MatrixArgs) -> Result<()> {
    let mut spec = ExperimentSpec::from_json(&read(&a.config)?)?;
    if let Some(s) = a.seed {
        spec.sweep.seed = s;
    }
    if let Some(j) = a.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    let res = run_matrix(&spec)?;
    let rows = csv_string(&res.rows)?;
    let summary = csv_string(&res.summary)?;
    match a.out.or(spec.output.clone()) {
        Some(out) => {
            write(&out, &rows)?;
            let mut s = out.clone().into_os_string();
            s.push(".summary.csv");
            write(Path::new(&s), &summary)?;
            print!("{summary}");
        }
        None => print!("{rows}"),
    }
    Ok(())
}

fn adversarial_cmd(a: AdvArgs) -> Result<()> {
    let adv = adversarial(a.kind, a.alpha, a.eps)?;
    let space = &*adv.instance.space;
    let space_json = match space.geometry() {
        Geometry::Line { coords, half } => json!({
            "coords": coords,
            "half_line": half,
            "origin": space.origin(),
        }),
        Geometry::General => json!({ "matrix": space.matrix(), "origin": space.origin() }),
    };
    let origin = space.origin();
    let doc = json!({
        "space": space_json,
        "instance": InstanceFile::of(&adv.instance),
        "prediction": PredictionFile::of(origin, &adv.prediction),
        "companion": adv.companion.as_ref().map(InstanceFile::of),
    });
    match a.out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            write(&dir.join("space.json"), &serde_json::to_string_pretty(&doc["space"])?)?;
            write(&dir.join("instance.json"), &serde_json::to_string_pretty(&doc["instance"])?)?;
            write(&dir.join("prediction.json"), &serde_json::to_string_pretty(&doc["prediction"])?)?;
            if let Some(c) = &adv.companion {
                write(&dir.join("companion.json"), &serde_json::to_string_pretty(&InstanceFile::of(c))?)?;
            }
            println!("wrote adversarial {} instance to {}", a.kind, dir.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&doc)?),
    }
    Ok(())
}

fn plot(a: PlotArgs) -> Result<()> {
    let rows = read_rows_file(&a.csv)?;
    write(&a.out, &plot_svg(&rows, &a.title)?)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Opt(a) => opt(a),
        Cmd::Error(a) => error(a),
        Cmd::Matrix(a) => matrix(a),
        Cmd::Adversarial(a) => adversarial_cmd(a),
        Cmd::Plot(a) => plot(a),
    }
}
