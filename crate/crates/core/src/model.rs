//! Instances, read-cost models, schedules and the stack simulator.
//!
//! Time is 1-based throughout: an instance of length `n` has steps `t = 1..=n`.
//! At step `t` the file of length `ℓ_t` is pushed and the top `j_t` files
//! (counting the new one) are merged into one. The step costs the merged
//! length plus `r_t · f(k_t)`, where `k_t` is the stack size afterwards.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One request: the length of the flushed file and the read rate until the next flush.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Arrival {
    pub length: f64,
    pub read_rate: f64,
}

impl Arrival {
    pub const ZERO: Arrival = Arrival { length: 0.0, read_rate: 0.0 };

    pub fn new(length: f64, read_rate: f64) -> Self {
        Self { length, read_rate }
    }
}

/// A time-ordered request sequence with O(1) interval sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    steps: Vec<Arrival>,
    len_prefix: Vec<f64>,
    read_prefix: Vec<f64>,
}

impl Instance {
    pub fn new(steps: Vec<Arrival>) -> Result<Self> {
        for (i, a) in steps.iter().enumerate() {
            if !(a.length.is_finite() && a.length >= 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "length at t={} is {} (must be finite and >= 0)",
                    i + 1,
                    a.length
                )));
            }
            if !(a.read_rate.is_finite() && a.read_rate >= 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "read rate at t={} is {} (must be finite and >= 0)",
                    i + 1,
                    a.read_rate
                )));
            }
        }
        let mut len_prefix = Vec::with_capacity(steps.len() + 1);
        let mut read_prefix = Vec::with_capacity(steps.len() + 1);
        let (mut l, mut r) = (0.0, 0.0);
        len_prefix.push(0.0);
        read_prefix.push(0.0);
        for a in &steps {
            l += a.length;
            r += a.read_rate;
            len_prefix.push(l);
            read_prefix.push(r);
        }
        Ok(Self { steps, len_prefix, read_prefix })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(l, r)| Arrival::new(l, r)).collect())
    }

    /// `n` copies of `(length, read_rate)`.
    pub fn uniform(length: f64, read_rate: f64, n: usize) -> Result<Self> {
        Self::new(vec![Arrival::new(length, read_rate); n])
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[Arrival] {
        &self.steps
    }

    /// Arrival at 1-based time `t`.
    pub fn at(&self, t: usize) -> Arrival {
        self.steps[t - 1]
    }

    pub fn length(&self, t: usize) -> f64 {
        self.steps[t - 1].length
    }

    pub fn read_rate(&self, t: usize) -> f64 {
        self.steps[t - 1].read_rate
    }

    /// ℓ[i,j]; zero when `i > j`.
    #[inline]
    pub fn ell(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.len_prefix[j] - self.len_prefix[i - 1]
        }
    }

    /// r[i,j]; zero when `i > j`.
    #[inline]
    pub fn reads(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.read_prefix[j] - self.read_prefix[i - 1]
        }
    }

    pub fn total_length(&self) -> f64 {
        *self.len_prefix.last().unwrap()
    }

    pub fn total_reads(&self) -> f64 {
        *self.read_prefix.last().unwrap()
    }

    pub(crate) fn len_prefix(&self) -> &[f64] {
        &self.len_prefix
    }

    pub(crate) fn read_prefix(&self) -> &[f64] {
        &self.read_prefix
    }

    /// The first `n` steps.
    pub fn prefix(&self, n: usize) -> Instance {
        let n = n.min(self.len());
        Instance {
            steps: self.steps[..n].to_vec(),
            len_prefix: self.len_prefix[..=n].to_vec(),
            read_prefix: self.read_prefix[..=n].to_vec(),
        }
    }

    /// Arithmetic means of lengths and read rates.
    pub fn empirical_means(&self) -> Result<(f64, f64)> {
        if self.is_empty() {
            return Err(Error::domain("empirical means of an empty instance"));
        }
        let n = self.len() as f64;
        Ok((self.total_length() / n, self.total_reads() / n))
    }

    /// max_t ℓ_t / r_t; infinite if some step has r_t = 0 < ℓ_t.
    pub fn write_read_ratio(&self) -> f64 {
        self.steps
            .iter()
            .map(|a| {
                if a.length == 0.0 {
                    0.0
                } else if a.read_rate == 0.0 {
                    f64::INFINITY
                } else {
                    a.length / a.read_rate
                }
            })
            .fold(0.0, f64::max)
    }
}

/// A named, non-decreasing read-cost function on stack sizes.
#[derive(Clone)]
pub struct ReadCostFn {
    name: String,
    f: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
}

impl ReadCostFn {
    pub fn new(name: impl Into<String>, f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), f: Arc::new(f) }
    }

    pub fn sqrt() -> Self {
        Self::new("sqrt", |k| (k as f64).sqrt())
    }

    pub fn power(p: f64) -> Self {
        Self::new(format!("power:{p}"), move |k| (k as f64).powf(p))
    }

    pub fn log() -> Self {
        Self::new("log", |k| (1.0 + k as f64).ln())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, k: usize) -> f64 {
        (self.f)(k)
    }
}

impl fmt::Debug for ReadCostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReadCostFn({})", self.name)
    }
}

/// The read-cost function family.
#[derive(Debug, Clone)]
pub enum CostModel {
    /// `f(k) = 0` for `k <= K`, infeasible beyond.
    CappedK(usize),
    /// `f(k) = k`.
    Linear,
    General(ReadCostFn),
}

impl CostModel {
    /// f(k), or `None` when the stack size is infeasible.
    pub fn read_factor(&self, k: usize) -> Option<f64> {
        match self {
            CostModel::CappedK(cap) => (k <= *cap).then_some(0.0),
            CostModel::Linear => Some(k as f64),
            CostModel::General(f) => Some(f.eval(k)),
        }
    }

    /// The shifted unit cost f_d(1): `f(1)` for `d = 0`, else `f(d+1) - f(d)`.
    pub fn unit_increment(&self, d: usize) -> Option<f64> {
        match self {
            CostModel::CappedK(cap) => (d < *cap).then_some(0.0),
            CostModel::Linear => Some(1.0),
            CostModel::General(f) => {
                if d == 0 {
                    Some(f.eval(1))
                } else {
                    Some(f.eval(d + 1) - f.eval(d))
                }
            }
        }
    }

    pub fn cap(&self) -> Option<usize> {
        match self {
            CostModel::CappedK(k) => Some(*k),
            _ => None,
        }
    }

    /// Checks parameters and that `f` is finite, non-negative and non-decreasing on `1..=n`.
    pub fn check(&self, n: usize) -> Result<()> {
        match self {
            CostModel::CappedK(0) => Err(Error::domain("CappedK requires K >= 1")),
            CostModel::CappedK(_) | CostModel::Linear => Ok(()),
            CostModel::General(f) => {
                let mut prev = None;
                for k in 1..=n.max(1) {
                    let v = f.eval(k);
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(Error::domain(format!("f({k}) = {v} is not a finite non-negative value")));
                    }
                    if let Some(p) = prev {
                        if v < p {
                            return Err(Error::NonMonotone { k: k - 1, next: k });
                        }
                    }
                    prev = Some(v);
                }
                Ok(())
            }
        }
    }

    /// Parses `capped:K`, `linear`, `sqrt`, `log`, or `power:P`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let unknown = || Error::Unknown { what: "cost model", value: s.to_string() };
        match s.split_once(':') {
            None => match s {
                "linear" => Ok(CostModel::Linear),
                "sqrt" => Ok(CostModel::General(ReadCostFn::sqrt())),
                "log" => Ok(CostModel::General(ReadCostFn::log())),
                _ => Err(unknown()),
            },
            Some(("capped", k)) => {
                let k: usize = k.parse().map_err(|_| unknown())?;
                if k == 0 {
                    return Err(Error::domain("CappedK requires K >= 1"));
                }
                Ok(CostModel::CappedK(k))
            }
            Some(("power", p)) => {
                let p: f64 = p.parse().map_err(|_| unknown())?;
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::domain("power exponent must be finite and >= 0"));
                }
                Ok(CostModel::General(ReadCostFn::power(p)))
            }
            _ => Err(unknown()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            CostModel::CappedK(k) => format!("capped:{k}"),
            CostModel::Linear => "linear".into(),
            CostModel::General(f) => f.name().to_string(),
        }
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Per-step merge widths `j_1..j_n`, each counting the newly inserted file.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub widths: Vec<usize>,
}

impl Schedule {
    pub fn new(widths: Vec<usize>) -> Self {
        Self { widths }
    }

    pub fn len(&self) -> usize {
        self.widths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.widths.is_empty()
    }

    /// Stack sizes `k_1..k_n`; fails at the first width outside `1..=k_{t-1}+1`.
    pub fn stack_sizes(&self) -> Result<Vec<usize>> {
        let mut k = 0usize;
        let mut out = Vec::with_capacity(self.widths.len());
        for (i, &j) in self.widths.iter().enumerate() {
            if j < 1 || j > k + 1 {
                return Err(Error::InvalidWidth { t: i + 1, width: j, max: k + 1 });
            }
            k = k + 1 - (j - 1);
            out.push(k);
        }
        Ok(out)
    }

    /// Rebuilds widths from a stack-size sequence via `j_t = k_{t-1} + 2 - k_t`.
    pub fn from_stack_sizes(sizes: &[usize]) -> Result<Self> {
        let mut prev = 0usize;
        let mut widths = Vec::with_capacity(sizes.len());
        for (i, &k) in sizes.iter().enumerate() {
            if k < 1 || k > prev + 1 {
                return Err(Error::InvalidWidth { t: i + 1, width: usize::MAX, max: prev + 1 });
            }
            widths.push(prev + 2 - k);
            prev = k;
        }
        Ok(Self { widths })
    }
}

/// Outcome of [`validate_schedule`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    LengthMismatch { expected: usize, got: usize },
    InvalidWidth { t: usize, width: usize, max: usize },
    Infeasible { t: usize, stack: usize, cap: usize },
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            Validity::Valid => Ok(()),
            Validity::LengthMismatch { expected, got } => Err(Error::LengthMismatch { expected, got }),
            Validity::InvalidWidth { t, width, max } => Err(Error::InvalidWidth { t, width, max }),
            Validity::Infeasible { t, stack, cap } => Err(Error::Infeasible { t, stack, cap }),
        }
    }
}

/// Reports the first structural or capacity violation of `schedule`.
pub fn validate_schedule(instance: &Instance, schedule: &Schedule, model: &CostModel) -> Validity {
    if schedule.len() != instance.len() {
        return Validity::LengthMismatch { expected: instance.len(), got: schedule.len() };
    }
    let mut k = 0usize;
    for (i, &j) in schedule.widths.iter().enumerate() {
        if j < 1 || j > k + 1 {
            return Validity::InvalidWidth { t: i + 1, width: j, max: k + 1 };
        }
        k = k + 2 - j;
        if let Some(cap) = model.cap() {
            if k > cap {
                return Validity::Infeasible { t: i + 1, stack: k, cap };
            }
        }
    }
    Validity::Valid
}

/// One simulated step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub merge_cost: f64,
    pub read_cost: f64,
    pub stack_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub steps: Vec<StepRecord>,
    /// Stack contents after each step, top first. Empty unless recording was requested.
    pub stacks: Vec<Vec<f64>>,
    pub total_merge: f64,
    pub total_read: f64,
    pub total_cost: f64,
}

impl SimulationTrace {
    pub fn max_stack(&self) -> usize {
        self.steps.iter().map(|s| s.stack_size).max().unwrap_or(0)
    }

    /// Running total cost after each step.
    pub fn cumulative_costs(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.steps
            .iter()
            .map(|s| {
                acc += s.merge_cost + s.read_cost;
                acc
            })
            .collect()
    }
}

/// Incremental stack simulator. Files are stored bottom-first; a merge of the top
/// `j` files sums them top-down, so small files are never swallowed by rounding
/// against a huge file further down. Total work is amortised O(1) per step because
/// every merged file except one disappears.
#[derive(Debug, Clone)]
pub struct StackSim {
    model: CostModel,
    files: Vec<f64>,
    t: usize,
    total_merge: f64,
    total_read: f64,
}

impl StackSim {
    pub fn new(model: CostModel) -> Self {
        Self { model, files: Vec::new(), t: 0, total_merge: 0.0, total_read: 0.0 }
    }

    pub fn stack_size(&self) -> usize {
        self.files.len()
    }

    pub fn time(&self) -> usize {
        self.t
    }

    /// File lengths, bottom first.
    pub fn files(&self) -> Vec<f64> {
        self.files.clone()
    }

    pub fn top_length(&self) -> Option<f64> {
        self.files.last().copied()
    }

    pub fn total_cost(&self) -> f64 {
        self.total_merge + self.total_read
    }

    pub fn total_merge(&self) -> f64 {
        self.total_merge
    }

    pub fn total_read(&self) -> f64 {
        self.total_read
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    /// Pushes `arrival`, merges the top `width` files and charges the read cost.
    pub fn step(&mut self, arrival: Arrival, width: usize) -> Result<StepRecord> {
        let t = self.t + 1;
        let k_prev = self.stack_size();
        if width < 1 || width > k_prev + 1 {
            return Err(Error::InvalidWidth { t, width, max: k_prev + 1 });
        }
        let base = k_prev + 1 - width;
        let merged = self.files[base..].iter().rev().fold(arrival.length, |acc, x| acc + x);
        let k = base + 1;
        let factor =
            self.model.read_factor(k).ok_or(Error::Infeasible { t, stack: k, cap: self.model.cap().unwrap_or(0) })?;
        self.files.truncate(base);
        self.files.push(merged);
        let read_cost = if arrival.read_rate == 0.0 { 0.0 } else { arrival.read_rate * factor };
        self.t = t;
        self.total_merge += merged;
        self.total_read += read_cost;
        Ok(StepRecord { merge_cost: merged, read_cost, stack_size: k })
    }
}

/// Simulates `schedule` on `instance` and returns the per-step trace with stack contents.
pub fn simulate(instance: &Instance, schedule: &Schedule, model: &CostModel) -> Result<SimulationTrace> {
    simulate_with(instance, schedule, model, true)
}

pub fn simulate_with(
    instance: &Instance,
    schedule: &Schedule,
    model: &CostModel,
    record_stacks: bool,
) -> Result<SimulationTrace> {
    if schedule.len() != instance.len() {
        return Err(Error::LengthMismatch { expected: instance.len(), got: schedule.len() });
    }
    let mut sim = StackSim::new(model.clone());
    let mut steps = Vec::with_capacity(instance.len());
    let mut stacks = Vec::new();
    for (a, &w) in instance.steps().iter().zip(&schedule.widths) {
        steps.push(sim.step(*a, w)?);
        if record_stacks {
            let mut files = sim.files();
            files.reverse();
            stacks.push(files);
        }
    }
    Ok(SimulationTrace {
        steps,
        stacks,
        total_merge: sim.total_merge,
        total_read: sim.total_read,
        total_cost: sim.total_cost(),
    })
}

/// Total cost Σ L_t + r_t f(k_t) of `schedule`.
pub fn cost_of(instance: &Instance, schedule: &Schedule, model: &CostModel) -> Result<f64> {
    if schedule.len() != instance.len() {
        return Err(Error::LengthMismatch { expected: instance.len(), got: schedule.len() });
    }
    let mut sim = StackSim::new(model.clone());
    for (a, &w) in instance.steps().iter().zip(&schedule.widths) {
        sim.step(*a, w)?;
    }
    Ok(sim.total_cost())
}
