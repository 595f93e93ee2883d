mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use leafwise::brownian::{estimate_contraction_rate, estimate_drift_integral, SimParams};
use leafwise::contact::{auto_epsilon, build_alpha, build_beta, check_reeb_transverse, contact_volume, leaf_dalpha};
use leafwise::diffusion::{check_superharmonic, log_diffuse, LaplacianEstimator};
use leafwise::instances::{make_instance_with, INSTANCE_NAMES};
use leafwise::lp::{constant_on_slice, extract_complex, solve_beta_lp, verify_certificate, LeafComplex};
use leafwise::pipeline::{run_pipeline, PipelineConfig};
use leafwise::{svg, DiffusionParams, FoliatedChartModel, Verdict};
use serde::Serialize;
use serde_json::{json, Value};

use input::InputArgs;
use report::{csv, Envelope, OutDir};

const USAGE_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "leafwise", version, about = "Transverse measures, contact forms and leaf LPs on foliated charts")]
struct Cli {
    /// Worker threads (wall time only; results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for report.json, its sidecar and artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Artifact formats written to --out.
    #[arg(long, global = true, value_delimiter = ',', default_values = ["json", "csv"])]
    format: Vec<Format>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Brownian estimators: holonomy contraction rate and drift integral.
    Simulate(SimulateArgs),
    /// Log-diffuse a measure and certify superharmonicity.
    Diffuse(DiffuseArgs),
    /// Contact condition and Reeb transversality of τ + εβ.
    CheckContact(ContactArgs),
    /// Exact leaf LP: a section β or an obstruction certificate.
    CheckObstruction(ObstructionArgs),
    /// Diffuse, contact and LP in sequence.
    Pipeline(PipelineArgs),
    /// Built-in instances.
    Instances {
        #[command(subcommand)]
        action: InstancesCmd,
    },
}

#[derive(Subcommand, Debug)]
enum InstancesCmd {
    List,
    Export {
        name: String,
        #[arg(long)]
        h: Option<f64>,
    },
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 2.0)]
    t: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 2000)]
    paths: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    buckets: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum EstimatorArg {
    Auto,
    Stencil,
    Transported,
}

impl From<EstimatorArg> for LaplacianEstimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Auto => LaplacianEstimator::Auto,
            EstimatorArg::Stencil => LaplacianEstimator::Stencil,
            EstimatorArg::Transported => LaplacianEstimator::Transported,
        }
    }
}

/// Diffusion parameters; `--params` replaces all of them.
#[derive(Args, Debug, Serialize)]
struct DiffusionArgs {
    /// DiffusionParams JSON (includes the seed).
    #[arg(long, conflicts_with = "seed")]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    t: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 16_000)]
    paths: usize,
    /// Cutoff radius R.
    #[arg(long, default_value_t = 4.0)]
    r: f64,
    /// Cutoff slope bound S.
    #[arg(long, default_value_t = 2.0)]
    s: f64,
    #[arg(long, required_unless_present = "params")]
    seed: Option<u64>,
    #[arg(long)]
    no_cutoff: bool,
    #[arg(long, default_value_t = 0.05)]
    se_tolerance: f64,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Auto)]
    estimator: EstimatorArg,
}

impl DiffusionArgs {
    fn params(&self) -> Result<DiffusionParams> {
        let p = match &self.params {
            Some(path) => {
                let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&s)?
            }
            None => {
                let mut p = DiffusionParams::new(self.t, self.dt, self.paths, self.r, self.s, self.seed.expect("clap enforces"))
                    .with_estimator(self.estimator.into());
                p.no_cutoff = self.no_cutoff;
                p.se_tolerance = self.se_tolerance;
                p
            }
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Serialize)]
struct DiffuseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    diffusion: DiffusionArgs,
    /// Margin κ₀ in `Δ log f' + 3 SE < −κ₀`.
    #[arg(long, default_value_t = 0.0)]
    kappa0: f64,
    /// Slice drawn in SVG output.
    #[arg(long, default_value_t = 0)]
    slice: usize,
}

#[derive(Args, Debug, Serialize)]
struct ContactArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fixed ε; without it the largest working 2⁻ᵏ is searched.
    #[arg(long, conflicts_with = "auto_eps")]
    eps: Option<f64>,
    /// Search ε = 2⁻ᵏ (the default when --eps is absent).
    #[arg(long)]
    auto_eps: bool,
    #[arg(long, default_value_t = 20)]
    k_max: u32,
    /// Leaf Laplacian JSON (from `diffuse`) replacing the stencil value.
    #[arg(long)]
    laplacian: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    slice: usize,
}

#[derive(Args, Debug, Serialize)]
struct ObstructionArgs {
    /// Leaf complex JSON.
    #[arg(long, conflicts_with_all = ["instance", "instance_file", "chart"])]
    complex: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Transverse slice (default: the instance's declared slice).
    #[arg(long)]
    slice: Option<usize>,
    /// Number of level curves (default: 3, or 0 for a constant measure).
    #[arg(long)]
    levels: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct PipelineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    diffusion: DiffusionArgs,
    #[arg(long, default_value_t = 0.0)]
    kappa0: f64,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 20)]
    k_max: u32,
    #[arg(long)]
    slice: Option<usize>,
    #[arg(long, default_value_t = 3)]
    levels: usize,
}

struct Ctx {
    out: OutDir,
    formats: Vec<Format>,
}

impl Ctx {
    fn wants(&self, f: Format) -> bool {
        self.out.path().is_some() && self.formats.contains(&f)
    }
}

struct Outcome {
    command: &'static str,
    seed: Option<u64>,
    config: Value,
    input: Option<String>,
    verdict: Verdict,
    result: Value,
}

fn config_of<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("args serialize")
}

fn node_xyz(chart: &FoliatedChartModel, n: usize) -> [f64; 3] {
    let p = chart.node_point(n);
    [p.x, p.y, p.z]
}

fn simulate(a: &SimulateArgs, ctx: &Ctx) -> Result<Outcome> {
    let inst = a.input.load()?;
    let mut p = SimParams::new(a.t, a.dt, a.paths, a.seed);
    p.buckets = a.buckets;
    let contraction = estimate_contraction_rate(&inst.chart, &inst.measure, &p)?;
    let drift = estimate_drift_integral(&inst.chart, &inst.measure, &p)?;
    let warned = contraction.warning.is_some() || drift.integral.warning.is_some();
    if ctx.wants(Format::Csv) {
        let rows = contraction.buckets.iter().zip(&drift.ito_slope.buckets).map(|(c, d)| vec![c.t, c.mean, c.se, d.mean, d.se]);
        ctx.out.write("buckets.csv", &csv(&["t", "log_holonomy_mean", "log_holonomy_se", "half_drift_mean", "half_drift_se"], rows))?;
    }
    Ok(Outcome {
        command: "simulate",
        seed: Some(a.seed),
        config: config_of(a),
        input: Some(inst.to_json()?),
        verdict: if warned { Verdict::Inconclusive } else { Verdict::Pass },
        result: json!({ "instance": inst.name, "contraction": contraction, "drift": drift }),
    })
}

fn diffuse(a: &DiffuseArgs, ctx: &Ctx) -> Result<Outcome> {
    let inst = a.input.load()?;
    let p = a.diffusion.params()?;
    let chart = &inst.chart;
    let res = log_diffuse(chart, &inst.measure, &p)?;
    let sh = check_superharmonic(chart, &res, a.kappa0);
    if ctx.out.path().is_some() {
        ctx.out.write("measure.json", &(serde_json::to_string_pretty(&res.measure.to_file())? + "\n"))?;
        let lap: Vec<Option<f64>> = res.laplacian.iter().map(|v| v.is_finite().then_some(*v)).collect();
        ctx.out.write("laplacian.json", &(serde_json::to_string(&lap)? + "\n"))?;
    }
    if ctx.wants(Format::Csv) {
        let rows = (0..chart.node_count()).map(|n| {
            let [x, y, z] = node_xyz(chart, n);
            vec![n as f64, x, y, z, res.exponent[n], res.exponent_se[n], res.laplacian[n], res.laplacian_se[n]]
        });
        ctx.out.write("diffusion.csv", &csv(&["node", "x", "y", "z", "exponent", "exponent_se", "laplacian", "laplacian_se"], rows))?;
    }
    if ctx.wants(Format::Svg) {
        ctx.out.write("laplacian.svg", &svg::heatmap(chart, &res.laplacian, a.slice, "Δ log f′"))?;
    }
    Ok(Outcome {
        command: "diffuse",
        seed: Some(p.seed),
        config: json!({ "args": config_of(a), "params": p }),
        input: Some(inst.to_json()?),
        verdict: sh.verdict,
        result: json!({
            "instance": inst.name,
            "estimator": res.estimator,
            "max_exponent_se": res.max_exponent_se,
            "certified": res.certified,
            "truncated": res.truncated,
            "superharmonic": sh,
        }),
    })
}

fn read_laplacian(path: &PathBuf, n: usize) -> Result<Vec<f64>> {
    let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Vec<Option<f64>> = serde_json::from_str(&s)?;
    if v.len() != n {
        bail!("laplacian has {} values, chart has {n} nodes", v.len());
    }
    Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
}

fn check_contact(a: &ContactArgs, ctx: &Ctx) -> Result<Outcome> {
    let inst = a.input.load()?;
    let chart = &inst.chart;
    let tau = &inst.measure;
    let lap = a.laplacian.as_ref().map(|p| read_laplacian(p, chart.node_count())).transpose()?;
    let (eps, trials) = match a.eps {
        Some(e) => (Some(e), vec![]),
        None => {
            let s = auto_epsilon(chart, tau, lap.as_deref(), a.k_max)?;
            (s.eps, s.trials)
        }
    };
    // Without a working ε the diagnostics are taken at the smallest one tried.
    let eval_eps = eps.unwrap_or_else(|| 0.5f64.powi(a.k_max as i32));
    let beta = build_beta(chart, tau)?;
    let mut alpha = build_alpha(tau, &beta, eval_eps)?;
    if let Some(l) = lap {
        alpha = alpha.with_leaf_laplacian(l)?;
    }
    let vol = contact_volume(chart, &alpha)?;
    let dsig = leaf_dalpha(chart, &alpha)?;
    let transverse = check_reeb_transverse(chart, &alpha);
    let (verdict, message, transverse) = match transverse {
        Ok(t) if eps.is_some() || a.eps.is_some() => {
            let msg = if t.verdict == Verdict::Pass { "the Reeb flow is transverse" } else { "the Reeb flow is not transverse" };
            (t.verdict, msg.to_string(), Some(t))
        }
        Ok(t) => (Verdict::Fail, "no ε makes α contact with a transverse Reeb flow; the Reeb flow is not transverse".into(), Some(t)),
        Err(e) => (Verdict::Fail, format!("the Reeb flow is not transverse: {e}"), None),
    };
    if ctx.wants(Format::Csv) {
        let rows = chart.interior_nodes().into_iter().map(|n| {
            let [x, y, z] = node_xyz(chart, n);
            vec![n as f64, x, y, z, vol.direct.values[n], vol.expansion.values[n], dsig[n]]
        });
        ctx.out.write("contact_volume.csv", &csv(&["node", "x", "y", "z", "alpha_dalpha", "expansion", "leaf_dalpha"], rows))?;
    }
    if ctx.wants(Format::Svg) {
        ctx.out.write("characteristic.svg", &svg::direction_field(chart, &alpha, a.slice, "characteristic foliation"))?;
        ctx.out.write("contact_volume.svg", &svg::heatmap(chart, &vol.direct.values, a.slice, "α∧dα"))?;
    }
    let min = vol.direct.min();
    Ok(Outcome {
        command: "check-contact",
        seed: None,
        config: config_of(a),
        input: Some(inst.to_json()?),
        verdict,
        result: json!({
            "instance": inst.name,
            "eps": eps,
            "evaluated_eps": eval_eps,
            "trials": trials,
            "contact_volume": {
                "min": min.map(|m| m.1),
                "min_node": min.map(|m| m.0),
                "max": vol.direct.max().map(|m| m.1),
                "max_discrepancy": vol.max_discrepancy,
                "tolerance": vol.tolerance,
                "consistent": vol.consistent,
            },
            "transverse": transverse,
            "message": message,
        }),
    })
}

fn check_obstruction(a: &ObstructionArgs, ctx: &Ctx) -> Result<Outcome> {
    let (complex, label, input) = match &a.complex {
        Some(path) => {
            let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let c = LeafComplex::from_json(&s)?;
            (c, path.display().to_string(), s)
        }
        None => {
            let inst = a.input.load()?;
            let k = a.slice.unwrap_or(inst.expected.lp_slice);
            let levels = a.levels.unwrap_or(if constant_on_slice(&inst.chart, &inst.measure, k) { 0 } else { 3 });
            let c = extract_complex(&inst.chart, &inst.measure, k, levels)?;
            (c, inst.name.clone(), inst.to_json()?)
        }
    };
    let outcome = solve_beta_lp(&complex)?;
    let verified = verify_certificate(&outcome, &complex)?;
    let verdict = match (verified, outcome.is_feasible()) {
        (false, _) => Verdict::Inconclusive,
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Fail,
    };
    if ctx.wants(Format::Json) {
        ctx.out.write("complex.json", &(complex.to_json()? + "\n"))?;
        ctx.out.write("outcome.json", &(serde_json::to_string_pretty(&outcome)? + "\n"))?;
    }
    Ok(Outcome {
        command: "check-obstruction",
        seed: None,
        config: config_of(a),
        input: Some(input),
        verdict,
        result: json!({
            "source": label,
            "n_faces": complex.faces.len(),
            "n_edges": complex.edges.len(),
            "n_marked": complex.marked.len(),
            "verified": verified,
            "outcome": outcome,
        }),
    })
}

fn pipeline(a: &PipelineArgs, _ctx: &Ctx) -> Result<Outcome> {
    let inst = a.input.load()?;
    let mut cfg = PipelineConfig::new(a.diffusion.params()?);
    cfg.kappa0 = a.kappa0;
    cfg.eps = a.eps;
    cfg.k_max = a.k_max;
    cfg.lp_slice = a.slice.unwrap_or(inst.expected.lp_slice);
    cfg.lp_levels = a.levels;
    let rep = run_pipeline(&inst, &cfg)?;
    Ok(Outcome {
        command: "pipeline",
        seed: Some(cfg.diffusion.seed),
        config: json!({ "args": config_of(a), "pipeline": cfg }),
        input: Some(inst.to_json()?),
        verdict: rep.verdict,
        result: serde_json::to_value(&rep)?,
    })
}

fn instances(action: &InstancesCmd, ctx: &Ctx) -> Result<Outcome> {
    match action {
        InstancesCmd::List => {
            let list = INSTANCE_NAMES
                .iter()
                .map(|n| {
                    let inst = make_instance_with(n, None)?;
                    Ok(json!({ "name": n, "dims": inst.chart.dims(), "expected": inst.expected, "notes": inst.notes }))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Outcome {
                command: "instances list",
                seed: None,
                config: json!({}),
                input: None,
                verdict: Verdict::Pass,
                result: Value::Array(list),
            })
        }
        InstancesCmd::Export { name, h } => {
            let inst = make_instance_with(name, *h)?;
            let text = inst.to_json()?;
            ctx.out.write(&format!("{name}.json"), &(text.clone() + "\n"))?;
            Ok(Outcome {
                command: "instances export",
                seed: None,
                config: json!({ "name": name, "h": h }),
                input: None,
                verdict: Verdict::Pass,
                result: serde_json::from_str(&text)?,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<Verdict> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let ctx = Ctx { out: OutDir::new(cli.out.clone())?, formats: cli.format.clone() };
    let start = Instant::now();
    let o = match &cli.cmd {
        Command::Simulate(a) => simulate(a, &ctx)?,
        Command::Diffuse(a) => diffuse(a, &ctx)?,
        Command::CheckContact(a) => check_contact(a, &ctx)?,
        Command::CheckObstruction(a) => check_obstruction(a, &ctx)?,
        Command::Pipeline(a) => pipeline(a, &ctx)?,
        Command::Instances { action } => instances(action, &ctx)?,
    };
    let env = Envelope::new(o.command, o.seed, o.config, o.input.as_deref(), o.verdict, o.result);
    // A closed stdout (e.g. piped into `head`) must not turn a verdict into a panic.
    let _ = writeln!(std::io::stdout().lock(), "{}", env.to_json());
    ctx.out.write_report(&env, rayon::current_num_threads(), start.elapsed().as_secs_f64())?;
    Ok(o.verdict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE_ERROR),
            };
        }
    };
    match run(&cli) {
        Ok(v) => ExitCode::from(v.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
