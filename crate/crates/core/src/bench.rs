//! Experiment harness: policies against the offline optimum across horizons.
//!
//! One instance of the largest horizon is generated per repetition and every
//! horizon uses its prefix, so the curves for different `n` share randomness.
//! Horizon-independent policies run once over the whole instance and report
//! every prefix cost from a single pass; the DP likewise yields all prefix optima
//! at once.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostModel, Instance, StackSim};
use crate::opt::{dp_opt_prefix_costs, GENERAL_DP_MAX_N};
use crate::policy::PolicySpec;
use crate::workload::{generate, WorkloadSpec};

/// Default largest horizon for which the DP optimum is computed.
pub const OPT_DEFAULT_MAX_N_CAPPED: usize = 2000;
pub const OPT_DEFAULT_MAX_N_LINEAR: usize = 1500;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BMC_THREADS";

fn default_true() -> bool {
    true
}

fn default_reps() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub workload: WorkloadSpec,
    pub policies: Vec<String>,
    /// Cost model descriptor: `capped:K`, `linear`, `sqrt`, `log` or `power:P`.
    pub model: String,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_true")]
    pub include_opt: bool,
    /// Largest horizon for the DP; defaults to 2000 (capped), 1500 (linear) or
    /// the general-model limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opt_max_n: Option<usize>,
    /// Repetition `r` uses workload seed `seed + r`.
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn cost_model(&self) -> Result<CostModel> {
        CostModel::parse(&self.model)
    }

    pub fn policy_specs(&self) -> Result<Vec<PolicySpec>> {
        self.policies.iter().map(|p| p.parse()).collect()
    }

    /// The DP cap in force: the configured one, never above what the DP supports.
    pub fn opt_cap(&self, model: &CostModel) -> usize {
        let default = match model {
            CostModel::CappedK(_) => OPT_DEFAULT_MAX_N_CAPPED,
            CostModel::Linear => OPT_DEFAULT_MAX_N_LINEAR,
            CostModel::General(_) => GENERAL_DP_MAX_N,
        };
        let cap = self.opt_max_n.unwrap_or(default);
        match model {
            CostModel::General(_) => cap.min(GENERAL_DP_MAX_N),
            _ => cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.workload.validate()?;
        if self.n_grid.is_empty() {
            return Err(Error::domain("n_grid is empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid[0] == 0 {
            return Err(Error::domain("n_grid must be positive and strictly ascending"));
        }
        if self.policies.is_empty() {
            return Err(Error::domain("no policies selected"));
        }
        if self.repetitions == 0 {
            return Err(Error::domain("repetitions must be >= 1"));
        }
        self.cost_model()?;
        self.policy_specs()?;
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub policy: String,
    pub rep: usize,
    pub total_cost: f64,
    pub per_step_cost: f64,
    pub max_stack: usize,
    pub opt_cost: Option<f64>,
    pub ratio: Option<f64>,
    /// Set when the cell could not be evaluated; the numeric fields are then NaN/0.
    pub error: Option<String>,
}

pub const CSV_HEADER: [&str; 9] =
    ["n", "policy", "rep", "total_cost", "per_step_cost", "max_stack", "opt_cost", "ratio", "error"];

/// Worker count: `BMC_THREADS` if set to a positive number, else all cores.
pub fn thread_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(t) if t > 0 => t,
        _ => avail,
    }
}

/// Per-prefix outcome of one policy run: cost and stack high-water mark after
/// each step, and the error that stopped the run, if any.
struct PrefixRun {
    cumulative: Vec<f64>,
    max_stack: Vec<usize>,
    failure: Option<(usize, String)>,
}

fn run_prefixes(instance: &Instance, spec: &PolicySpec, model: &CostModel, horizon: usize) -> PrefixRun {
    let mut out = PrefixRun { cumulative: Vec::new(), max_stack: Vec::new(), failure: None };
    let mut policy = match spec.build(model, horizon) {
        Ok(p) => p,
        Err(e) => {
            out.failure = Some((1, e.to_string()));
            return out;
        }
    };
    let mut sim = StackSim::new(model.clone());
    let mut hw = 0;
    for (t, &a) in instance.steps().iter().take(horizon).enumerate() {
        let step = policy.decide(a).and_then(|w| sim.step(a, w));
        match step {
            Ok(rec) => {
                hw = hw.max(rec.stack_size);
                out.cumulative.push(sim.total_cost());
                out.max_stack.push(hw);
            }
            Err(e) => {
                out.failure = Some((t + 1, e.to_string()));
                break;
            }
        }
    }
    out
}

enum Task {
    Opt { rep: usize, upto: usize },
    Prefix { rep: usize, policy: usize },
    Single { rep: usize, policy: usize, n: usize },
}

enum Outcome {
    Opt { rep: usize, costs: Result<Vec<f64>> },
    Rows(Vec<ResultRow>),
}

/// Runs every `(n, policy, repetition)` cell and returns rows sorted by `n`,
/// then policy (in configuration order), then repetition.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let model = config.cost_model()?;
    let specs = config.policy_specs()?;
    let n_max = *config.n_grid.last().expect("validated non-empty");
    let instances = (0..config.repetitions)
        .map(|rep| {
            let mut w = config.workload.clone();
            w.seed = w.seed.wrapping_add(rep as u64);
            w.n = n_max;
            generate(&w)
        })
        .collect::<Result<Vec<_>>>()?;
    let opt_cap = config.opt_cap(&model);
    let opt_upto = config.n_grid.iter().copied().filter(|&n| n <= opt_cap).max();

    let mut tasks = Vec::new();
    for (rep, inst) in instances.iter().enumerate() {
        if let (true, Some(upto)) = (config.include_opt, opt_upto) {
            tasks.push(Task::Opt { rep, upto: upto.min(inst.len()) });
        }
        for (pi, spec) in specs.iter().enumerate() {
            if spec.horizon_independent() {
                tasks.push(Task::Prefix { rep, policy: pi });
            } else {
                for &n in &config.n_grid {
                    tasks.push(Task::Single { rep, policy: pi, n });
                }
            }
        }
    }

    let grid = &config.n_grid;
    let names: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
    let execute = |task: &Task| -> Outcome {
        match *task {
            Task::Opt { rep, upto } => {
                Outcome::Opt { rep, costs: dp_opt_prefix_costs(&instances[rep].prefix(upto), &model) }
            }
            Task::Prefix { rep, policy } => {
                let inst = &instances[rep];
                let run = run_prefixes(inst, &specs[policy], &model, inst.len());
                Outcome::Rows(grid.iter().map(|&n| row_from(&run, n, inst.len(), &names[policy], rep)).collect())
            }
            Task::Single { rep, policy, n } => {
                let inst = &instances[rep];
                let run = run_prefixes(inst, &specs[policy], &model, n.min(inst.len()));
                Outcome::Rows(vec![row_from(&run, n, inst.len(), &names[policy], rep)])
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::internal(format!("thread pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| tasks.par_iter().map(execute).collect());

    let mut opt: Vec<Option<Result<Vec<f64>>>> = (0..config.repetitions).map(|_| None).collect();
    let mut rows = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Opt { rep, costs } => opt[rep] = Some(costs),
            Outcome::Rows(r) => rows.extend(r),
        }
    }
    for row in &mut rows {
        if row.error.is_some() {
            continue;
        }
        match &opt[row.rep] {
            Some(Ok(costs)) if row.n <= costs.len() => {
                let c = costs[row.n - 1];
                row.opt_cost = Some(c);
                row.ratio = Some(if c > 0.0 {
                    row.total_cost / c
                } else if row.total_cost == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                });
            }
            Some(Err(e)) if row.n <= opt_cap => row.error = Some(format!("opt: {e}")),
            _ => {}
        }
    }
    let order = |p: &str| names.iter().position(|x| x == p).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (r.n, order(&r.policy), r.rep));
    Ok(rows)
}

fn row_from(run: &PrefixRun, n: usize, available: usize, policy: &str, rep: usize) -> ResultRow {
    let mut row = ResultRow {
        n,
        policy: policy.to_string(),
        rep,
        total_cost: f64::NAN,
        per_step_cost: f64::NAN,
        max_stack: 0,
        opt_cost: None,
        ratio: None,
        error: None,
    };
    if n > available {
        row.error = Some(format!("workload has only {available} steps"));
    } else if n <= run.cumulative.len() {
        row.total_cost = run.cumulative[n - 1];
        row.per_step_cost = row.total_cost / n as f64;
        row.max_stack = run.max_stack[n - 1];
    } else {
        let (t, msg) = run.failure.clone().unwrap_or((run.cumulative.len() + 1, "run ended early".into()));
        row.error = Some(format!("t={t}: {msg}"));
    }
    row
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        x.to_string()
    }
}

/// Writes `rows` as CSV with [`CSV_HEADER`]. Missing values are empty fields.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.policy.clone(),
            r.rep.to_string(),
            fmt_f64(r.total_cost),
            fmt_f64(r.per_step_cost),
            if r.error.is_some() { String::new() } else { r.max_stack.to_string() },
            r.opt_cost.map(fmt_f64).unwrap_or_default(),
            r.ratio.map(fmt_f64).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`].
pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let hdr: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if hdr != CSV_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header {hdr:?}") });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |what: &str| Error::Parse { line, msg: format!("bad {what}") };
        let opt_f = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad("number"))
            }
        };
        let error = (!rec[8].is_empty()).then(|| rec[8].to_string());
        rows.push(ResultRow {
            n: rec[0].parse().map_err(|_| bad("n"))?,
            policy: rec[1].to_string(),
            rep: rec[2].parse().map_err(|_| bad("rep"))?,
            total_cost: opt_f(&rec[3])?.unwrap_or(f64::NAN),
            per_step_cost: opt_f(&rec[4])?.unwrap_or(f64::NAN),
            max_stack: if rec[5].is_empty() { 0 } else { rec[5].parse().map_err(|_| bad("max_stack"))? },
            opt_cost: opt_f(&rec[6])?,
            ratio: opt_f(&rec[7])?,
            error,
        });
    }
    Ok(rows)
}
