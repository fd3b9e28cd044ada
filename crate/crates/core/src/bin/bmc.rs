//! `bmc`: command-line front end for the compaction laboratory.
//!
//! Exit codes: 0 success, 1 usage error, 2 infeasible input, 3 internal error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use bmc_lab::adversary::{build_ladder, evaluate, LadderOverrides, DEFAULT_STEP_BUDGET};
use bmc_lab::bench::{read_csv, run_experiment, write_csv, ExperimentConfig};
use bmc_lab::io::{create, read_instance, read_schedule, write_instance, write_runs, write_schedule};
use bmc_lab::opt::{approx2_linear, brute_force_opt, dp_opt, uniform_opt_cappedk, uniform_opt_linear, UniformParams};
use bmc_lab::plot::{emit_plot_data, PlotOptions};
use bmc_lab::policy::{run_policy, PolicySpec};
use bmc_lab::workload::{generate, WorkloadKind, WorkloadSpec};
use bmc_lab::{simulate, CostModel, Error, ErrorClass, Instance, MergeTree, Result, Schedule, SimulationTrace};

#[derive(Parser)]
#[command(name = "bmc", version, about = "Compaction-policy laboratory for Bigtable merge compaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a workload instance as CSV.
    Gen(GenArgs),
    /// Simulate a schedule or an online policy on an instance.
    Simulate(SimulateArgs),
    /// Compute an offline optimal (or approximate) schedule.
    Opt(OptArgs),
    /// Run an experiment grid and write CSV results.
    Bench(BenchArgs),
    /// Play the lower-bound adversary against a policy.
    Adversary(AdversaryArgs),
    /// Render results CSV as an SVG chart and a text table.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Lognormal,
}

#[derive(Args, Clone, Default)]
struct WorkloadFlags {
    /// Workload distribution.
    #[arg(long, value_enum)]
    dist: Option<Dist>,
    /// Log-normal location parameter.
    #[arg(long)]
    mu: Option<f64>,
    /// Log-normal variance.
    #[arg(long)]
    v: Option<f64>,
    /// Mean of the exponential read rates.
    #[arg(long)]
    read_mean: Option<f64>,
    /// Length of every step of a uniform workload.
    #[arg(long)]
    lbar: Option<f64>,
    /// Read rate of every step of a uniform workload.
    #[arg(long)]
    rbar: Option<f64>,
    /// Clamp log-normal draws at this quantile.
    #[arg(long)]
    truncate_quantile: Option<f64>,
    /// Random seed (default 0).
    #[arg(long)]
    seed: Option<u64>,
}

impl WorkloadFlags {
    fn any(&self) -> bool {
        self.dist.is_some()
    }

    fn kind(&self) -> Result<WorkloadKind> {
        match self.dist {
            Some(Dist::Uniform) => {
                Ok(WorkloadKind::Uniform { mean_length: self.lbar.unwrap_or(1.0), mean_read: self.rbar.unwrap_or(1.0) })
            }
            Some(Dist::Lognormal) => Ok(WorkloadKind::Lognormal {
                mu: self.mu.unwrap_or(10.0),
                v: self.v.unwrap_or(1.0),
                read_mean: self.read_mean.unwrap_or(1.0),
                truncate_quantile: self.truncate_quantile,
            }),
            None => Err(usage("--dist is required")),
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    workload: WorkloadFlags,
    /// Number of steps.
    #[arg(long)]
    n: usize,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Instance CSV.
    #[arg(long)]
    instance: PathBuf,
    /// Cost model: capped:K, linear, sqrt, log or power:P.
    #[arg(long)]
    model: String,
    /// Schedule CSV (t,width) to replay.
    #[arg(long, conflicts_with = "policy")]
    schedule: Option<PathBuf>,
    /// Online policy to run instead of a fixed schedule.
    #[arg(long)]
    policy: Option<String>,
    /// Per-step trace CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the schedule's merge tree (key,left,right lines) here.
    #[arg(long)]
    dump_tree: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Method {
    /// Exact interval DP.
    Dp,
    /// Exhaustive search (small n only).
    Brute,
    /// Balanced-split 2-approximation (linear model).
    Approx2,
    /// Closed-form construction for instances whose steps are all identical.
    Uniform,
}

#[derive(Args)]
struct OptArgs {
    /// Instance CSV.
    #[arg(long)]
    instance: PathBuf,
    /// Cost model: capped:K, linear, sqrt, log or power:P.
    #[arg(long)]
    model: String,
    #[arg(long, value_enum, default_value = "dp")]
    method: Method,
    /// Largest n accepted by the exhaustive search.
    #[arg(long, default_value_t = bmc_lab::opt::BRUTE_FORCE_DEFAULT_MAX_N)]
    max_n: usize,
    /// Schedule CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the schedule's merge tree (key,left,right lines) here.
    #[arg(long)]
    dump_tree: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment configuration; any flag below overrides its field.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    workload: WorkloadFlags,
    /// Comma-separated policies, e.g. brb:5,default:5.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    /// Cost model: capped:K, linear, sqrt, log or power:P.
    #[arg(long)]
    model: Option<String>,
    /// Comma-separated ascending horizons.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    /// Skip the offline optimum.
    #[arg(long)]
    no_opt: bool,
    /// Largest n for which the optimum is computed.
    #[arg(long)]
    opt_max_n: Option<usize>,
    /// Repetitions; repetition r uses seed + r.
    #[arg(long)]
    reps: Option<usize>,
    /// Results CSV (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG chart here (and a .txt table next to it).
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct AdversaryArgs {
    /// Stack cap K.
    #[arg(long)]
    k: usize,
    /// Separation parameter L_K.
    #[arg(long)]
    lk: f64,
    /// Policy to play against, e.g. brb:2.
    #[arg(long)]
    policy: String,
    /// Explicit L_1..L_{K-1}, comma-separated.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<f64>>,
    /// Explicit capacities N_1..N_{K-1}, comma-separated (requires --ladder).
    #[arg(long, value_delimiter = ',', requires = "ladder")]
    capacities: Option<Vec<f64>>,
    /// Cap on policy decisions that are not fast-forwarded.
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    budget: u64,
    /// Run-length instance CSV (length,read_rate,count).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Statistics JSON (stdout if omitted).
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV written by `bench`.
    #[arg(long)]
    input: PathBuf,
    /// SVG output.
    #[arg(long)]
    out: PathBuf,
    /// Text table output (defaults to the SVG path with a .txt extension).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Chart title.
    #[arg(long)]
    title: Option<String>,
    /// Logarithmic n axis.
    #[arg(long)]
    log_x: bool,
    /// Logarithmic cost axis.
    #[arg(long)]
    log_y: bool,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Runs `f` against the file at `path`, or stdout when no path is given.
fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Prints the summary on stdout when the main output went to a file, else on stderr.
fn summary(to_file: bool, value: serde_json::Value) {
    if to_file {
        println!("{value}");
    } else {
        eprintln!("{value}");
    }
}

fn write_trace<W: Write + ?Sized>(trace: &SimulationTrace, widths: &[usize], out: &mut W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "width", "merge_cost", "read_cost", "stack_size"])?;
    for (t, (s, width)) in trace.steps.iter().zip(widths).enumerate() {
        w.write_record([
            (t + 1).to_string(),
            width.to_string(),
            s.merge_cost.to_string(),
            s.read_cost.to_string(),
            s.stack_size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn dump_tree(path: Option<&Path>, schedule: &Schedule) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, MergeTree::from_schedule(schedule)?.to_text())?;
    }
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let spec = WorkloadSpec { kind: a.workload.kind()?, n: a.n, seed: a.workload.seed.unwrap_or(0) };
    let inst = generate(&spec)?;
    with_output(a.out.as_deref(), |w| write_instance(&inst, w))
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let model = CostModel::parse(&a.model)?;
    let (trace, schedule, name) = match (&a.schedule, &a.policy) {
        (Some(p), None) => {
            let s = read_schedule(p)?;
            (simulate(&inst, &s, &model)?, s, "schedule".to_string())
        }
        (None, Some(p)) => {
            let spec: PolicySpec = p.parse()?;
            let mut policy = spec.build(&model, inst.len())?;
            let run = run_policy(&inst, policy.as_mut(), &model)?;
            let s = run.schedule();
            (run.trace, s, spec.to_string())
        }
        _ => return Err(usage("give exactly one of --schedule or --policy")),
    };
    with_output(a.out.as_deref(), |w| write_trace(&trace, &schedule.widths, w))?;
    dump_tree(a.dump_tree.as_deref(), &schedule)?;
    summary(
        a.out.is_some(),
        json!({
            "source": name,
            "model": model.label(),
            "n": inst.len(),
            "total_cost": trace.total_cost,
            "merge_cost": trace.total_merge,
            "read_cost": trace.total_read,
            "per_step_cost": if inst.is_empty() { 0.0 } else { trace.total_cost / inst.len() as f64 },
            "max_stack": trace.max_stack(),
        }),
    );
    Ok(())
}

fn uniform_params(inst: &Instance) -> Result<UniformParams> {
    let first = inst.steps().first().copied().ok_or_else(|| usage("empty instance"))?;
    if inst.steps().iter().any(|&a| a != first) {
        return Err(usage("--method uniform needs every step to be identical"));
    }
    UniformParams::new(first.length, first.read_rate, inst.len())
}

fn cmd_opt(a: OptArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let model = CostModel::parse(&a.model)?;
    let (cost, schedule, approximate) = match a.method {
        Method::Dp => {
            let s = dp_opt(&inst, &model)?;
            (s.cost, s.schedule, false)
        }
        Method::Brute => {
            let s = brute_force_opt(&inst, &model, a.max_n)?;
            (s.cost, s.schedule, false)
        }
        Method::Approx2 => {
            if !matches!(model, CostModel::Linear) {
                return Err(usage("--method approx2 applies to the linear model only"));
            }
            let (tree, cost) = approx2_linear(&inst)?;
            (cost, tree.to_schedule(), true)
        }
        Method::Uniform => {
            let p = uniform_params(&inst)?;
            let sol = match model {
                CostModel::CappedK(k) => uniform_opt_cappedk(p, k)?,
                CostModel::Linear => uniform_opt_linear(p)?,
                CostModel::General(_) => return Err(usage("--method uniform supports capped:K and linear")),
            };
            (sol.cost, sol.tree.to_schedule(), sol.approximate)
        }
    };
    with_output(a.out.as_deref(), |w| write_schedule(&schedule, w))?;
    dump_tree(a.dump_tree.as_deref(), &schedule)?;
    let latency = schedule.stack_sizes()?.into_iter().max().unwrap_or(0);
    summary(
        a.out.is_some(),
        json!({
            "model": model.label(),
            "n": inst.len(),
            "cost": cost,
            "approximate": approximate,
            "max_stack": latency,
        }),
    );
    Ok(())
}

fn bench_config(a: &BenchArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_json(&fs::read_to_string(p)?)?,
        None => {
            if !a.workload.any() {
                return Err(usage("bench needs --config or --dist"));
            }
            ExperimentConfig {
                workload: WorkloadSpec { kind: a.workload.kind()?, n: 0, seed: 0 },
                policies: Vec::new(),
                model: String::new(),
                n_grid: Vec::new(),
                include_opt: true,
                opt_max_n: None,
                repetitions: 1,
                output: None,
                plot: None,
            }
        }
    };
    if a.config.is_some() && a.workload.any() {
        cfg.workload.kind = a.workload.kind()?;
    }
    if let Some(s) = a.workload.seed {
        cfg.workload.seed = s;
    }
    if let Some(p) = &a.policies {
        cfg.policies = p.clone();
    }
    if let Some(m) = &a.model {
        cfg.model = m.clone();
    }
    if let Some(g) = &a.n_grid {
        cfg.n_grid = g.clone();
    }
    if a.no_opt {
        cfg.include_opt = false;
    }
    if a.opt_max_n.is_some() {
        cfg.opt_max_n = a.opt_max_n;
    }
    if let Some(r) = a.reps {
        cfg.repetitions = r;
    }
    if a.out.is_some() {
        cfg.output = a.out.clone();
    }
    if a.plot.is_some() {
        cfg.plot = a.plot.clone();
    }
    if cfg.model.is_empty() {
        return Err(usage("--model is required"));
    }
    Ok(cfg)
}

fn write_plot(
    rows: &[bmc_lab::bench::ResultRow],
    svg_path: &Path,
    table: Option<&Path>,
    opts: &PlotOptions,
) -> Result<()> {
    let (svg, text) = emit_plot_data(rows, opts)?;
    fs::write(svg_path, svg)?;
    let table_path = table.map(Path::to_path_buf).unwrap_or_else(|| svg_path.with_extension("txt"));
    fs::write(table_path, text)?;
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let cfg = bench_config(&a)?;
    let rows = run_experiment(&cfg)?;
    with_output(cfg.output.as_deref(), |w| write_csv(&rows, w))?;
    if let Some(p) = &cfg.plot {
        let opts = PlotOptions { title: format!("cost per time step ({})", cfg.model), ..Default::default() };
        write_plot(&rows, p, None, &opts)?;
    }
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    if errors > 0 {
        eprintln!("{errors} of {} cells reported errors (see the error column)", rows.len());
    }
    Ok(())
}

fn cmd_adversary(a: AdversaryArgs) -> Result<()> {
    let overrides = a.ladder.clone().map(|l| LadderOverrides { l, capacities: a.capacities.clone() });
    let ladder = build_ladder(a.k, a.lk, overrides.as_ref())?;
    let spec: PolicySpec = a.policy.parse()?;
    let model = CostModel::CappedK(a.k);
    let mut policy = spec.build(&model, 0)?;
    let (run, report) = evaluate(policy.as_mut(), &ladder, a.budget)?;
    if let Some(p) = &a.out {
        let mut w = create(p)?;
        write_runs(&run.runs, &mut w)?;
        w.flush()?;
    }
    let text = serde_json::to_string_pretty(&report)?;
    match &a.stats {
        Some(p) => {
            fs::write(p, text + "\n")?;
            println!("{}", json!({"policy": report.policy, "ratio": report.ratio}));
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let rows = read_csv(fs::File::open(&a.input)?)?;
    let mut opts = PlotOptions { log_x: a.log_x, log_y: a.log_y, ..Default::default() };
    if let Some(t) = a.title {
        opts.title = t;
    }
    write_plot(&rows, &a.out, a.table.as_deref(), &opts)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Opt(a) => cmd_opt(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Adversary(a) => cmd_adversary(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Infeasible => 2,
                ErrorClass::Internal => 3,
            })
        }
    }
}
