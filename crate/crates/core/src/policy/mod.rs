//! Online compaction policies.
//!
//! A policy sees arrivals one at a time and answers with a merge width. Feeding
//! those widths to [`StackSim`] gives the policy's cost; [`run_policy`] does both.

mod brb;
mod default;
mod doubling;
mod linear_online;
mod merge_all;

use std::fmt;
use std::str::FromStr;

pub use brb::Brb;
pub use default::DefaultPolicy;
pub use doubling::{Doubling, DoublingMode};
pub use linear_online::LinearOnline;
pub use merge_all::MergeAll;

use crate::error::{Error, Result};
use crate::model::{Arrival, CostModel, Instance, SimulationTrace, StackSim, StepRecord};

pub trait OnlinePolicy: Send {
    fn name(&self) -> String;

    /// Decides the width for `arrival` and commits to it. The decision may depend
    /// only on this and earlier arrivals.
    fn decide(&mut self, arrival: Arrival) -> Result<usize>;

    /// A per-step diagnostic reported alongside the trace: the potential for the
    /// linear policy, the current phase index for phase-based policies.
    fn diagnostic(&self) -> Option<f64> {
        None
    }

    /// How many of the next zero-length, zero-read arrivals (up to `max`) the
    /// policy would answer with width 2 while leaving every other part of its
    /// state unchanged except counters that [`OnlinePolicy::absorb_zero_run`]
    /// can advance in bulk. Zero means "step one at a time".
    fn stationary_zero_run(&self, _max: f64) -> f64 {
        0.0
    }

    /// Advances the state as if `count` zero arrivals had each been answered with
    /// width 2. Only called with a count allowed by `stationary_zero_run`.
    fn absorb_zero_run(&mut self, _count: f64, _top_length: f64) {}
}

/// Policy selection, as written on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    MergeAll,
    Default(usize),
    Brb(usize),
    LinearOnline,
    DoublingCapped(usize),
    DoublingLinear,
    DoublingKnown { mean_length: f64, mean_read: f64 },
}

impl PolicySpec {
    /// Instantiates the policy. `horizon` is only used by the known-distribution mode.
    pub fn build(&self, model: &CostModel, horizon: usize) -> Result<Box<dyn OnlinePolicy>> {
        Ok(match *self {
            PolicySpec::MergeAll => Box::new(MergeAll::new()),
            PolicySpec::Default(k) => Box::new(DefaultPolicy::new(k)?),
            PolicySpec::Brb(k) => Box::new(Brb::new(k)?),
            PolicySpec::LinearOnline => Box::new(LinearOnline::new()),
            PolicySpec::DoublingCapped(k) => Box::new(Doubling::new(DoublingMode::Capped(k))?),
            PolicySpec::DoublingLinear => Box::new(Doubling::new(DoublingMode::Linear)?),
            PolicySpec::DoublingKnown { mean_length, mean_read } => {
                Box::new(Doubling::known(model, mean_length, mean_read, horizon)?)
            }
        })
    }

    /// True when decisions do not depend on the horizon, so one run over a long
    /// instance yields every prefix's cost.
    pub fn horizon_independent(&self) -> bool {
        !matches!(self, PolicySpec::DoublingKnown { .. })
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::Unknown { what: "policy", value: s.to_string() };
        let k = |v: &str| -> Result<usize> {
            let k: usize = v.parse().map_err(|_| unknown())?;
            if k == 0 {
                return Err(Error::domain(format!("policy {s}: K must be >= 1")));
            }
            Ok(k)
        };
        match s.split_once(':') {
            None => match s {
                "merge-all" => Ok(PolicySpec::MergeAll),
                "linear-online" => Ok(PolicySpec::LinearOnline),
                "doubling-linear" => Ok(PolicySpec::DoublingLinear),
                _ => Err(unknown()),
            },
            Some(("default", v)) => Ok(PolicySpec::Default(k(v)?)),
            Some(("brb", v)) => Ok(PolicySpec::Brb(k(v)?)),
            Some(("doubling-capped", v)) => Ok(PolicySpec::DoublingCapped(k(v)?)),
            Some(("doubling-known", v)) => {
                let (l, r) = v.split_once(',').ok_or_else(unknown)?;
                let parse = |x: &str| -> Result<f64> {
                    let x: f64 = x.trim().parse().map_err(|_| unknown())?;
                    if !(x.is_finite() && x >= 0.0) {
                        return Err(Error::domain(format!("policy {s}: means must be finite and >= 0")));
                    }
                    Ok(x)
                };
                Ok(PolicySpec::DoublingKnown { mean_length: parse(l)?, mean_read: parse(r)? })
            }
            _ => Err(unknown()),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::MergeAll => write!(f, "merge-all"),
            PolicySpec::Default(k) => write!(f, "default:{k}"),
            PolicySpec::Brb(k) => write!(f, "brb:{k}"),
            PolicySpec::LinearOnline => write!(f, "linear-online"),
            PolicySpec::DoublingCapped(k) => write!(f, "doubling-capped:{k}"),
            PolicySpec::DoublingLinear => write!(f, "doubling-linear"),
            PolicySpec::DoublingKnown { mean_length, mean_read } => {
                write!(f, "doubling-known:{mean_length},{mean_read}")
            }
        }
    }
}

/// A policy run: the simulated trace, the widths chosen and per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRun {
    pub trace: SimulationTrace,
    pub widths: Vec<usize>,
    pub diagnostics: Vec<Option<f64>>,
}

impl PolicyRun {
    pub fn schedule(&self) -> crate::model::Schedule {
        crate::model::Schedule::new(self.widths.clone())
    }
}

/// Streams `instance` through `policy` and the simulator.
pub fn run_policy(instance: &Instance, policy: &mut dyn OnlinePolicy, model: &CostModel) -> Result<PolicyRun> {
    run_policy_with(instance, policy, model, false)
}

pub fn run_policy_with(
    instance: &Instance,
    policy: &mut dyn OnlinePolicy,
    model: &CostModel,
    record_stacks: bool,
) -> Result<PolicyRun> {
    let mut sim = StackSim::new(model.clone());
    let n = instance.len();
    let mut steps: Vec<StepRecord> = Vec::with_capacity(n);
    let mut widths = Vec::with_capacity(n);
    let mut diagnostics = Vec::with_capacity(n);
    let mut stacks = Vec::new();
    for &a in instance.steps() {
        let w = policy.decide(a)?;
        if w < 1 || w > sim.stack_size() + 1 {
            return Err(Error::internal(format!(
                "policy {} chose width {w} with {} files on the stack at t={}",
                policy.name(),
                sim.stack_size(),
                sim.time() + 1
            )));
        }
        steps.push(sim.step(a, w)?);
        widths.push(w);
        diagnostics.push(policy.diagnostic());
        if record_stacks {
            let mut files = sim.files();
            files.reverse();
            stacks.push(files);
        }
    }
    let trace = SimulationTrace {
        steps,
        stacks,
        total_merge: sim.total_merge(),
        total_read: sim.total_read(),
        total_cost: sim.total_cost(),
    };
    Ok(PolicyRun { trace, widths, diagnostics })
}
